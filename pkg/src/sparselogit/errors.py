"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes of the supplied arrays do not agree."""


class ParameterError(ValueError):
    """A parameter lies outside its documented domain."""


class NumericError(RuntimeError):
    """A computation produced a non-finite intermediate value."""


class DataValidationError(ValueError):
    """Input data violates the documented contract (CSV layout, binary response, ...)."""


class CalibrationError(RuntimeError):
    """Tuning-parameter selection could not be completed."""


class GridTooLowError(CalibrationError):
    """No grid value reaches the requested coverage level."""
