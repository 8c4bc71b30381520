"""Exception types raised across the toolkit."""


class CalibrationError(Exception):
    """Base class for toolkit errors."""


class InvalidArgumentError(CalibrationError, ValueError):
    pass


class DegenerateGeometryError(CalibrationError):
    """The end-effector coincides with the cable anchor, so the cable direction is undefined."""

    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"{message} (sample {index})")
        self.index = index


class OptimizerAbort(CalibrationError):
    """The objective returned a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NumericalFailure(CalibrationError):
    """Innovation variance was not positive during a filter update."""

    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"{message} (sample {index})")
        self.index = index
