"""Exception types shared across the package."""


class PrefboError(Exception):
    """Base class for package errors."""


class InputShapeError(PrefboError):
    """Input or parameter vector has the wrong shape or length."""


class DomainError(PrefboError):
    """A point lies outside the function's domain or a scalar outside its range."""


class CapacityError(PrefboError):
    """Requested more items than the finite source can provide."""


class PoolExhaustedError(PrefboError):
    """Every candidate pair in the pool has already been asked."""


class TrainingDivergenceError(PrefboError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class CalibrationError(PrefboError):
    """Expert calibration could not reach the target accuracy."""

    def __init__(self, message: str, bracket: tuple | None = None):
        super().__init__(message)
        self.bracket = bracket


class ConditioningError(PrefboError):
    """A covariance matrix stayed non-positive-definite after jitter escalation."""


class EmptyDatasetError(PrefboError):
    """An operation that needs data was called with an empty dataset."""
