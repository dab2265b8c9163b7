"""Fast randomized conditional independence tests with random Fourier features."""

from rcit._kernels import BACKEND
from rcit.citest import (
    CITestConfig,
    CITestResult,
    cov_frobenius_statistic,
    estimate_null_weights,
    feature_ci_test,
    fisher_z,
    rcit,
    rcot,
    ridge_residualize,
)
from rcit.data import DataMatrix
from rcit.exceptions import AccuracyError, DegenerateDistributionError, InvalidInputError

__all__ = [
    "BACKEND",
    "AccuracyError",
    "CITestConfig",
    "CITestResult",
    "DataMatrix",
    "DegenerateDistributionError",
    "InvalidInputError",
    "cov_frobenius_statistic",
    "estimate_null_weights",
    "feature_ci_test",
    "fisher_z",
    "rcit",
    "rcot",
    "ridge_residualize",
]
