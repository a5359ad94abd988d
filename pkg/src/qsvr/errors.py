"""Exception types shared across the package."""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """The dual solver ran out of iterations.

    Carries the best iterate (a fitted ``SvrModel``) and the largest KKT
    violation observed at termination so callers can inspect or accept it.
    """

    def __init__(self, message: str, model=None, max_violation: float = float("nan")):
        super().__init__(message)
        self.model = model
        self.max_violation = max_violation


class UndefinedStatisticError(ValueError):
    """A statistic is undefined on the given data (e.g. zero variance)."""


class IngestionError(ValueError):
    """Input data file is malformed."""
