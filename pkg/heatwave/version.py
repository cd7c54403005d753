"""
Version number for heatwave
"""
__version__ = '0.1.0'
