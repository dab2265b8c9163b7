"""Exception types raised by the package."""

from __future__ import annotations


class InvalidInputError(ValueError):
    """Raised when an input violates a documented precondition."""


class DegenerateDistributionError(ValueError):
    """Raised when a weighted chi-square distribution has no positive weight."""


class AccuracyError(RuntimeError):
    """Numerical integration did not reach the requested tolerance.

    :param best_estimate: the value obtained before giving up.
    :param error_estimate: the integrator's absolute error estimate.
    """

    def __init__(self, message: str, best_estimate: float, error_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate
