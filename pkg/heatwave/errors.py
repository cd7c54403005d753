"""
Exceptions raised by the heatwave toolkit.

Everything numeric raises a subclass of HeatwaveError so that the command
line layer can map failures onto exit statuses in one place.
"""


class HeatwaveError(Exception):
    """Base class for all heatwave errors."""


class ValidationError(HeatwaveError):
    """Raised when an input fails a precondition (shape, sign, range)."""


class SpaceError(HeatwaveError):
    """Raised when a metric measure space cannot be built or violates the metric axioms."""


class OperatorError(HeatwaveError):
    """Raised when an operator is not self-adjoint, not positive, or too large."""


class RegimeError(HeatwaveError):
    """Raised when a check is asked to evaluate outside its valid regime."""


class FamilyError(HeatwaveError):
    """Raised when a multiplier family cannot be built on the requested grid."""


class ConfigError(HeatwaveError):
    """Raised for run configuration problems (exit status 2)."""
