"""Exception types raised by the awnmf package."""


class AwnmfError(Exception):
    """Base class for all package errors."""


class DimensionError(AwnmfError, ValueError):
    """Invalid problem dimensions (zero size, or rank above min(M, N))."""


class ShapeMismatchError(AwnmfError, ValueError):
    pass


class HyperparameterError(AwnmfError, ValueError):
    pass


class NonnegativityError(AwnmfError, ValueError):
    pass


class UnknownMethodError(AwnmfError, ValueError):
    pass


class InvalidKError(AwnmfError, ValueError):
    pass


class LengthMismatchError(AwnmfError, ValueError):
    pass


class DatasetError(AwnmfError):
    """Raised for unreadable or empty datasets."""


class ParseError(DatasetError, ValueError):
    """A CSV cell could not be parsed; carries its 1-based row and column."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(AwnmfError, ValueError):
    pass


class InsufficientClassesError(ConfigError):
    pass
