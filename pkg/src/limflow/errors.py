"""Exception types shared across the package."""


class LimflowError(Exception):
    """Base class for all errors raised by this package."""


class BranchCutError(LimflowError):
    """The principal matrix logarithm is undefined (spectrum touches the closed negative real axis)."""


class SingularSolveError(LimflowError):
    """A two-sided linear solve has no unique solution or failed numerically."""


class SingularMatrixError(LimflowError):
    """A covariance matrix required to be invertible is singular or near-singular."""


class DegenerateVarianceError(LimflowError):
    """A variable has zero (or negative) variance where positive variance is required."""


class InsufficientDataError(LimflowError):
    """The time series is too short for the requested operation."""


class FitFailureError(LimflowError):
    """Every optimization start failed; carries per-start diagnostics."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else []


class CsvParseError(LimflowError):
    """Malformed CSV input; message includes row/column context."""
