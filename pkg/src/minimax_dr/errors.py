"""Exception hierarchy shared by every module."""


class MinimaxDRError(Exception):
    """Base class for all package errors."""


class InputError(MinimaxDRError, ValueError):
    """Malformed or inconsistent inputs (shapes, ranges, empty sets)."""


class DegenerateInputError(InputError):
    """Inputs are well formed but carry no usable variation."""


class NumericError(MinimaxDRError, ArithmeticError):
    """A factorization or solve failed.

    Parameters
    ----------
    message : str
    pivot : int, optional
        Index of the offending pivot when a Cholesky factorization breaks down.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class TuningError(MinimaxDRError):
    """Every grid point failed during hyperparameter search."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class ConfigError(MinimaxDRError):
    """Invalid run configuration (unknown keys, missing CSV columns)."""


class DataError(MinimaxDRError):
    """Data file contents violate the expected schema."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
