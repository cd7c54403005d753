"""
heatwave: spectral calculus, heat and wave propagators and their estimates
on finite metric measure spaces.
"""
