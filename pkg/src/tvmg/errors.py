"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ``DataError`` -> 3 and
``NumericError`` -> 4.
"""


class TvmgError(Exception):
    """Base class for all toolkit errors."""


class DataError(TvmgError):
    """Input data is malformed, incomplete or out of domain."""


class DomainError(DataError, ValueError):
    """An argument lies outside the domain of a function."""


class EmptyPanelError(DataError):
    """No unit survives balanced-sample construction."""


class NumericError(TvmgError):
    """An estimation step failed numerically."""


class SingularMatrixError(NumericError):
    """Weighted Gram matrix is singular beyond tolerance."""


class EstimationError(NumericError):
    """Estimation is impossible at some time point or for some variable."""


class SelectionError(NumericError):
    """Bandwidth selection produced no finite score."""


class ParameterError(TvmgError, ValueError):
    """Invalid tuning parameter (bandwidth, block length, level, ...)."""
