"""Exception hierarchy shared across the package."""


class MFSRError(Exception):
    """Base class for all errors raised by mfsr."""


class DimensionError(MFSRError, ValueError):
    """Array or grid dimensions are invalid or inconsistent."""


class ParameterError(MFSRError, ValueError):
    """A numeric parameter lies outside its allowed range."""


class InputError(MFSRError, ValueError):
    """An input collection is empty or otherwise unusable."""


class ConfigError(MFSRError, ValueError):
    """A configuration key is unknown or carries an invalid value."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class NumericalError(MFSRError, ArithmeticError):
    """An iteration produced non-finite values."""
