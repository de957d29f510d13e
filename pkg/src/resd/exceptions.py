"""Exception hierarchy shared by the detector, the I/O layer and the CLI."""


class ResdError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 4


class InvalidConfigError(ResdError, ValueError):
    """A configuration value is out of range or inconsistent."""

    exit_code = 2


class InvalidWindowError(InvalidConfigError):
    """A window is too short for the requested statistic."""


class InvalidInputError(ResdError, ValueError):
    """Input data is malformed, too short or out of order."""

    exit_code = 3

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidValueError(InvalidInputError):
    """A NaN or infinite observation reached the detector."""


class HorizonExhaustedError(ResdError, RuntimeError):
    """The stream outran the forecast horizon and no refit is scheduled."""

    exit_code = 4
