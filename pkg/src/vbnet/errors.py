"""Exception types shared across the package."""


class VBNetError(Exception):
    """Base class for all package errors."""


class ShapeError(VBNetError, ValueError):
    """Array shapes are incompatible for the requested operation."""


class ConfigError(VBNetError, ValueError):
    """Invalid hyperparameter or configuration value."""


class DataError(VBNetError):
    """Input data could not be read or parsed."""


class NumericalError(VBNetError, FloatingPointError):
    """A non-finite value appeared during optimization or evaluation."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step
