"""Randomized conditional independence tests.

``rcot`` tests conditional uncorrelatedness of Fourier features of X and Y
after ridge-regressing both on Fourier features of Z. ``rcit`` does the same
with the X side replaced by features of the concatenation (X, Z). Under the
null the statistic ``n * ||Cov(res_a, res_b)||_F**2`` is asymptotically a
weighted sum of chi-square(1) variables whose weights are the eigenvalues of
the second-moment matrix of the vectorised residual outer products.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg, stats

from rcit import _kernels, wchi2
from rcit.exceptions import InvalidInputError
from rcit.features import random_features, standardize_columns

APPROX_METHODS = ("LPB", "HBE", "SW", "WOODF", "IMHOF", "PERM")


@dataclass(frozen=True)
class CITestConfig:
    """Hyperparameters shared by :func:`rcot` and :func:`rcit`.

    :param num_features_xy: Fourier features for the X (or (X, Z)) and Y sides.
    :param num_features_z: Fourier features for the conditioning set.
    :param ridge: ridge added to the feature covariance of Z.
    :param approx_method: null approximation, one of ``APPROX_METHODS``.
    :param median_subsample: rows used by the median bandwidth heuristic.
    :param seed: root of the seed hierarchy for maps and permutations.
    :param num_permutations: permutations used when ``approx_method == "PERM"``.
    """

    num_features_xy: int = 5
    num_features_z: int = 25
    ridge: float = 1e-10
    approx_method: str = "LPB"
    median_subsample: int = 500
    seed: int = 0
    num_permutations: int = 500

    def __post_init__(self):
        if self.num_features_xy < 1 or self.num_features_z < 1:
            raise InvalidInputError("feature counts must be >= 1")
        if not self.ridge > 0:
            raise InvalidInputError("ridge must be positive")
        if self.approx_method.upper() not in APPROX_METHODS:
            raise InvalidInputError(f"approx_method must be one of {APPROX_METHODS}")
        if self.num_permutations < 1:
            raise InvalidInputError("num_permutations must be >= 1")
        object.__setattr__(self, "approx_method", self.approx_method.upper())


@dataclass
class CITestResult:
    statistic: float
    p_value: float
    method: str
    n: int
    approx: str = ""
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    elapsed: float = 0.0
    fallback_flag: bool = False
    seed: int | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["eigenvalues"] = [float(v) for v in self.eigenvalues]
        out["eigenvalue_count"] = len(self.eigenvalues)
        out["elapsed_ms"] = 1000.0 * self.elapsed
        del out["elapsed"]
        return out


def _as_2d(data, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be a 1-D or 2-D array")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def ridge_residualize(features, conditioning, ridge: float = 1e-10) -> np.ndarray:
    """Residuals of the column-centred ``features`` after ridge regression on ``conditioning``.

    The regression coefficients are ``(S_cc + ridge I)^-1 S_cf`` with ``S``
    sample covariances. With no conditioning columns the centred features are
    returned.
    """
    f = _as_2d(features, "features")
    c = _as_2d(conditioning, "conditioning") if np.size(conditioning) else np.zeros((f.shape[0], 0))
    if c.shape[0] != f.shape[0]:
        raise InvalidInputError("features and conditioning have different row counts")
    if not ridge > 0:
        raise InvalidInputError("ridge must be positive")
    fc = f - f.mean(axis=0)
    if c.shape[1] == 0:
        return fc
    cc = c - c.mean(axis=0)
    n1 = f.shape[0] - 1
    s_cc = cc.T @ cc / n1
    s_cc[np.diag_indices_from(s_cc)] += ridge
    s_cf = cc.T @ fc / n1
    try:
        coef = linalg.solve(s_cc, s_cf, assume_a="pos")
    except (linalg.LinAlgError, ValueError):
        coef = linalg.pinv(s_cc) @ s_cf
    return fc - cc @ coef


def cov_frobenius_statistic(res_a, res_b) -> float:
    """``n * ||Cov(res_a, res_b)||_F**2`` with the 1/(n-1) covariance."""
    a = _as_2d(res_a, "res_a")
    b = _as_2d(res_b, "res_b")
    n = a.shape[0]
    if b.shape[0] != n:
        raise InvalidInputError("residual matrices have different row counts")
    if n < 2:
        raise InvalidInputError("need at least 2 rows")
    cov = (a - a.mean(axis=0)).T @ (b - b.mean(axis=0)) / (n - 1)
    return float(n * np.sum(cov * cov))


def estimate_null_weights(res_a, res_b) -> np.ndarray:
    """Eigenvalues (descending, clamped at 0) of the residual-product moment matrix.

    The matrix is ``(1/n) sum_r v_r v_r^T`` with ``v_r`` the vectorised outer
    product of row ``r`` of ``res_a`` and ``res_b``; it has
    ``res_a.shape[1] * res_b.shape[1]`` eigenvalues.
    """
    a = np.ascontiguousarray(_as_2d(res_a, "res_a"))
    b = np.ascontiguousarray(_as_2d(res_b, "res_b"))
    if a.shape[0] != b.shape[0]:
        raise InvalidInputError("residual matrices have different row counts")
    pi = _kernels.pi_moment(a, b)
    pi = 0.5 * (pi + pi.T)
    eig = linalg.eigvalsh(pi)[::-1]
    return np.clip(eig, 0.0, None)


def null_p_value(statistic: float, eigenvalues, method: str = "LPB") -> tuple[float, bool]:
    """Survival of ``statistic`` under the weighted chi-square null.

    Returns ``(p_value, fallback_flag)``. All-zero weights give ``(1.0, True)``.
    """
    eig = np.asarray(eigenvalues, dtype=float)
    if eig.size == 0 or not np.any(eig > 0):
        return 1.0, True
    approx = wchi2.approximation(eig, method)
    p = float(approx.survival(statistic))
    if not np.isfinite(p):
        approx = wchi2.hall_buckley_eagleson(eig)
        return float(np.clip(approx.survival(statistic), 0.0, 1.0)), True
    return float(np.clip(p, 0.0, 1.0)), bool(approx.fallback)


def permutation_p_value(res_a, res_b, num_permutations: int,
                        rng: np.random.Generator) -> tuple[float, float]:
    """Permutation p-value ``(1 + #{S_perm >= S}) / (R + 1)`` permuting rows of ``res_b``.

    Returns ``(statistic, p_value)``.
    """
    a = _as_2d(res_a, "res_a")
    b = _as_2d(res_b, "res_b")
    n = a.shape[0]
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    scale = n / (n - 1) ** 2
    observed = scale * float(np.sum((a.T @ b) ** 2))
    at = np.ascontiguousarray(a.T)
    hits = 0
    for _ in range(num_permutations):
        cov = at @ b[rng.permutation(n)]
        if scale * float(np.sum(cov * cov)) >= observed:
            hits += 1
    return observed, (1 + hits) / (num_permutations + 1)


def feature_ci_test(feat_a, feat_b, feat_c, cfg: CITestConfig | None = None,
                    rng: np.random.Generator | None = None, method: str = "features") -> CITestResult:
    """Run the test on precomputed (standardised) feature matrices.

    ``rng`` is only used by the permutation null.
    """
    cfg = cfg or CITestConfig()
    start = time.perf_counter()
    a = _as_2d(feat_a, "feat_a")
    b = _as_2d(feat_b, "feat_b")
    n = a.shape[0]
    c = _as_2d(feat_c, "feat_c") if np.size(feat_c) else np.zeros((n, 0))
    if b.shape[0] != n or c.shape[0] != n:
        raise InvalidInputError("row counts differ")
    if n < 2:
        raise InvalidInputError("need at least 2 rows")
    res_a = ridge_residualize(a, c, cfg.ridge)
    res_b = ridge_residualize(b, c, cfg.ridge)
    eig = estimate_null_weights(res_a, res_b)
    if cfg.approx_method == "PERM":
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        stat, p = permutation_p_value(res_a, res_b, cfg.num_permutations, rng)
        flag = False
    else:
        stat = cov_frobenius_statistic(res_a, res_b)
        p, flag = null_p_value(stat, eig, cfg.approx_method)
    return CITestResult(
        statistic=stat, p_value=p, method=method, n=n, approx=cfg.approx_method,
        eigenvalues=eig, elapsed=time.perf_counter() - start,
        fallback_flag=flag, seed=cfg.seed,
    )


def _prepare(x, y, z):
    x = _as_2d(x, "x")
    y = _as_2d(y, "y")
    n = x.shape[0]
    z = np.zeros((n, 0)) if z is None or np.size(z) == 0 else _as_2d(z, "z")
    if y.shape[0] != n or z.shape[0] != n:
        raise InvalidInputError("x, y and z must have the same number of rows")
    if n < 2:
        raise InvalidInputError("need at least 2 rows")
    return standardize_columns(x), standardize_columns(y), (standardize_columns(z) if z.shape[1] else z)


def _run(x, y, z, cfg: CITestConfig, extended: bool) -> CITestResult:
    start = time.perf_counter()
    x, y, z = _prepare(x, y, z)
    # seed hierarchy: one child stream per feature block, one for permutations
    rng_z, rng_x, rng_y, rng_perm = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(4)
    )
    if z.shape[1]:
        fz, _ = random_features(z, cfg.num_features_z, rng_z, cfg.median_subsample)
    else:
        fz = z
    a_input = np.hstack([x, z]) if extended and z.shape[1] else x
    fa, _ = random_features(a_input, cfg.num_features_xy, rng_x, cfg.median_subsample)
    fb, _ = random_features(y, cfg.num_features_xy, rng_y, cfg.median_subsample)
    result = feature_ci_test(fa, fb, fz, cfg, rng_perm, method="RCIT" if extended else "RCoT")
    result.elapsed = time.perf_counter() - start
    return result


def rcot(x, y, z=None, cfg: CITestConfig | None = None) -> CITestResult:
    """Randomized conditional correlation test of ``x`` and ``y`` given ``z``."""
    return _run(x, y, z, cfg or CITestConfig(), extended=False)


def rcit(x, y, z=None, cfg: CITestConfig | None = None) -> CITestResult:
    """Randomized conditional independence test; features on ``(x, z)`` for the X side."""
    return _run(x, y, z, cfg or CITestConfig(), extended=True)


def fisher_z(x, y, z=None) -> CITestResult:
    """Fisher's z test of zero partial correlation between ``x`` and ``y`` given ``z``."""
    start = time.perf_counter()
    x = _as_2d(x, "x")
    y = _as_2d(y, "y")
    if x.shape[1] != 1 or y.shape[1] != 1:
        raise InvalidInputError("fisher_z needs single-column x and y")
    n = x.shape[0]
    z = np.zeros((n, 0)) if z is None or np.size(z) == 0 else _as_2d(z, "z")
    k = z.shape[1]
    if y.shape[0] != n or z.shape[0] != n:
        raise InvalidInputError("row counts differ")
    if n <= k + 3:
        raise InvalidInputError(f"fisher_z needs n > |z| + 3, got n={n}, |z|={k}")
    design = np.hstack([np.ones((n, 1)), z])
    coef, *_ = np.linalg.lstsq(design, np.hstack([x, y]), rcond=None)
    res = np.hstack([x, y]) - design @ coef
    denom = np.sqrt(np.sum(res[:, 0] ** 2) * np.sum(res[:, 1] ** 2))
    r = float(np.sum(res[:, 0] * res[:, 1]) / denom) if denom > 0 else 0.0
    flag = False
    if abs(r) >= 1 - 1e-15:
        stat, p, flag = np.inf, 0.0, True
    else:
        stat = float(np.sqrt(n - k - 3) * abs(np.arctanh(r)))
        p = float(2 * stats.norm.sf(stat))
    return CITestResult(statistic=stat, p_value=p, method="FisherZ", n=n, approx="normal",
                        elapsed=time.perf_counter() - start, fallback_flag=flag)


TESTS = {"rcot": rcot, "rcit": rcit}


def run_test(name: str, x, y, z=None, cfg: CITestConfig | None = None) -> CITestResult:
    """Dispatch by name: ``rcot``, ``rcit`` or ``fisher-z``."""
    key = name.lower().replace("_", "-")
    if key in ("fisher-z", "fisherz", "fz"):
        return fisher_z(x, y, z)
    if key not in TESTS:
        raise InvalidInputError(f"unknown test {name!r}")
    return TESTS[key](x, y, z, cfg)
