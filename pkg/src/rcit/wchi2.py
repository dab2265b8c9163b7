"""Distribution of a positively weighted sum of independent chi-square(1) variables.

``Q = sum_i w_i z_i**2`` with ``z_i`` i.i.d. standard normal. This module
provides the cumulant and moment recursions, four moment-matching
approximations (Satterthwaite-Welch gamma, Hall-Buckley-Eagleson, Wood's F,
Lindsay-Pilla-Basak gamma mixture), Imhof's numerical inversion of the
characteristic function, and a Monte-Carlo estimate used as a test oracle.

Every approximation returns an object with ``survival(x)`` and ``cdf(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special, stats

from rcit import _kernels
from rcit.exceptions import AccuracyError, DegenerateDistributionError

# weights below this fraction of the largest one are treated as exact zeros
CLAMP_RELATIVE = 1e-10

METHODS = ("SW", "HBE", "WOODF", "LPB", "IMHOF")


@dataclass(frozen=True)
class WeightedChiSquare:
    """Nonnegative weights of ``sum_i w_i z_i**2``.

    Build instances with :meth:`from_weights`, which clamps negative and
    negligible weights to zero.
    """

    weights: np.ndarray

    @classmethod
    def from_weights(cls, weights) -> "WeightedChiSquare":
        w = np.asarray(weights, dtype=float).ravel()
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise DegenerateDistributionError("weights must be a non-empty finite vector")
        w = np.where(w > 0, w, 0.0)
        top = w.max()
        if top <= 0:
            raise DegenerateDistributionError("all weights are zero")
        w = np.where(w >= CLAMP_RELATIVE * top, w, 0.0)
        w.setflags(write=False)
        return cls(w)

    @property
    def positive(self) -> np.ndarray:
        return self.weights[self.weights > 0]

    def __len__(self) -> int:
        return self.weights.size

    def mean(self) -> float:
        return float(self.weights.sum())

    def variance(self) -> float:
        return float(2 * np.sum(self.weights**2))


def _as_dist(dist) -> WeightedChiSquare:
    if isinstance(dist, WeightedChiSquare):
        return dist
    return WeightedChiSquare.from_weights(dist)


def cumulants_of_weights(dist, r_max: int) -> np.ndarray:
    """Cumulants ``c_r = 2**(r-1) (r-1)! sum_i w_i**r`` for ``r = 1..r_max``."""
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    w = np.asarray(dist.weights if isinstance(dist, WeightedChiSquare) else dist, dtype=float)
    r = np.arange(1, r_max + 1)
    power_sums = np.array([np.sum(w**k) for k in r])
    return 2.0 ** (r - 1) * special.factorial(r - 1) * power_sums


def moments_from_cumulants(cumulants) -> np.ndarray:
    """Raw moments from cumulants by the standard binomial recursion."""
    c = np.asarray(cumulants, dtype=float)
    if c.size == 0:
        raise ValueError("need at least one cumulant")
    m = np.zeros_like(c)
    m[0] = c[0]
    for r in range(2, c.size + 1):
        total = c[r - 1]
        for i in range(1, r):
            total += special.comb(r - 1, i - 1, exact=True) * c[i - 1] * m[r - i - 1]
        m[r - 1] = total
    return m


class _Approximation:
    """Common interface: survival/cdf evaluation plus a fallback flag."""

    method = ""
    fallback = False

    def survival(self, x):
        raise NotImplementedError

    def cdf(self, x):
        return 1.0 - self.survival(x)


@dataclass
class GammaApprox(_Approximation):
    """Two-moment gamma match."""

    shape: float
    scale: float
    method: str = "SW"
    fallback: bool = False

    def survival(self, x):
        return stats.gamma.sf(x, self.shape, scale=self.scale)


@dataclass
class ShiftedChiSquareApprox(_Approximation):
    """Three-cumulant match to a shifted, scaled chi-square with ``dof`` degrees."""

    mean: float
    var: float
    dof: float
    method: str = "HBE"
    fallback: bool = False

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        t = np.sqrt(2 * self.dof / self.var) * (x - self.mean) + self.dof
        out = np.where(x <= 0, 1.0, stats.chi2.sf(np.maximum(t, 0.0), self.dof))
        return float(out) if out.ndim == 0 else out


@dataclass
class WoodFApprox(_Approximation):
    """Three-moment match to ``beta * U / V`` with independent gamma U, V."""

    beta: float
    alpha1: float
    alpha2: float
    method: str = "WOODF"
    fallback: bool = False

    def survival(self, x):
        t = np.asarray(x, dtype=float) * self.alpha2 / (self.alpha1 * self.beta)
        return stats.f.sf(t, 2 * self.alpha1, 2 * self.alpha2)


@dataclass
class GammaMixture(_Approximation):
    """Finite gamma mixture with a common shape parameter.

    ``cdf(x) = sum_i mixture_weights[i] * GammaCDF(x; shape, scales[i])``.
    When the moment system could not be solved, ``fallback`` is set and
    evaluation is delegated to ``fallback_approx``.
    """

    shape: float
    scales: np.ndarray
    mixture_weights: np.ndarray
    method: str = "LPB"
    fallback: bool = False
    fallback_approx: _Approximation | None = field(default=None, repr=False)

    def survival(self, x):
        if self.fallback_approx is not None:
            return self.fallback_approx.survival(x)
        x = np.asarray(x, dtype=float)
        sf = stats.gamma.sf(x[..., None], self.shape, scale=self.scales)
        out = np.clip(sf @ self.mixture_weights, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def moments(self, r_max: int) -> np.ndarray:
        """Analytic raw moments ``E[X**r]`` of the mixture for ``r = 1..r_max``."""
        r = np.arange(1, r_max + 1)
        rising = np.exp(special.gammaln(self.shape + r) - special.gammaln(self.shape))
        return np.array(
            [np.sum(self.mixture_weights * self.scales**k) for k in r]
        ) * rising


def satterthwaite_welch(dist) -> GammaApprox:
    """Gamma with the same mean and variance as the weighted sum."""
    d = _as_dist(dist)
    c1, c2 = cumulants_of_weights(d, 2)
    return GammaApprox(shape=c1**2 / c2, scale=c2 / c1)


def hall_buckley_eagleson(dist) -> ShiftedChiSquareApprox:
    d = _as_dist(dist)
    c1, c2, c3 = cumulants_of_weights(d, 3)
    return ShiftedChiSquareApprox(mean=c1, var=c2, dof=8 * c2**3 / c3**2)


def wood_f(dist) -> WoodFApprox | ShiftedChiSquareApprox:
    """Wood's three-moment F approximation.

    The parameter system has no solution when the cumulants are those of a
    single scaled chi-square (all weights equal); HBE is returned then, with
    ``fallback`` set.
    """
    d = _as_dist(dist)
    k1, k2, k3 = cumulants_of_weights(d, 3)
    r1 = 4 * k2**2 * k1 + k3 * (k2 - k1**2)
    r2 = k3 * k1 - 2 * k2**2
    # r2 is a difference of nearly equal terms for equal weights
    if r1 <= 0 or r2 <= 1e-12 * k3 * k1:
        approx = hall_buckley_eagleson(d)
        approx.fallback = True
        return approx
    beta = r1 / r2
    alpha1 = 2 * k1 * (k3 * k1 + k1**2 * k2 - k2**2) / r1
    alpha2 = 3 + 2 * k2 * (k2 + k1**2) / r2
    return WoodFApprox(beta=beta, alpha1=alpha1, alpha2=alpha2)


def _scaled_hankel(lt: float, moments: np.ndarray, n: int) -> np.ndarray:
    # moments of the mixing distribution over gamma means, given shape 1/lt
    r = np.arange(1, 2 * n + 1)
    rising = np.cumprod(1.0 + (r - 1) * lt)
    mt = np.concatenate(([1.0], moments[: 2 * n] / rising))
    idx = np.arange(n + 1)
    return mt[idx[:, None] + idx[None, :]]


def _det_root(moments: np.ndarray, n: int, upper: float) -> float:
    f = lambda lt: np.linalg.det(_scaled_hankel(lt, moments, n))
    lo, hi = 0.0, upper * (1 - 1e-12)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi < 0:
        return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-12)
    # no sign change on the full bracket: take the largest interior crossing
    grid = np.linspace(lo, hi, 401)
    vals = np.array([f(g) for g in grid])
    crossings = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if crossings.size == 0:
        raise ArithmeticError("no root of the moment determinant")
    k = crossings[-1]
    return optimize.brentq(f, grid[k], grid[k + 1], xtol=1e-14, rtol=1e-12)


def _lpb_fit(moments: np.ndarray, n: int) -> tuple[float, np.ndarray, np.ndarray]:
    lt = moments[1] / moments[0] ** 2 - 1.0
    if not lt > 0:
        raise ArithmeticError("non-positive variance")
    for i in range(2, n + 1):
        lt = _det_root(moments, i, lt)
    hankel = _scaled_hankel(lt, moments, n)
    # polynomial whose roots are the mixture means: cofactors along the last row
    coeffs = np.array([
        (-1) ** (k + n) * np.linalg.det(np.delete(hankel[:n], k, axis=1))
        for k in range(n + 1)
    ])
    roots = np.roots(coeffs[::-1])
    if np.any(np.abs(roots.imag) > 1e-8 * np.abs(roots.real).max()):
        raise ArithmeticError("complex mixture means")
    mu = np.sort(roots.real)
    if np.any(mu <= 0):
        raise ArithmeticError("non-positive mixture mean")
    vander = mu[None, :] ** np.arange(n)[:, None]
    pi = np.linalg.solve(vander, hankel[:n, 0])
    if np.any(pi < -1e-10):
        raise ArithmeticError("negative mixture weight")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    return lt, mu, pi


def lindsay_pilla_basak(dist, n_components: int | None = None) -> GammaMixture:
    """Gamma mixture matching the first ``2 * n_components`` moments.

    ``n_components`` defaults to ``min(L, 4)`` with ``L`` the number of
    positive weights. If the moment system is ill-conditioned or the fitted
    mixture misses the target moments, HBE is used and ``fallback`` is set.
    """
    d = _as_dist(dist)
    w = d.positive
    n = min(w.size, 4) if n_components is None else int(n_components)
    if n < 1:
        raise ValueError("n_components must be >= 1")
    # normalise to unit mean for conditioning; rescale the fitted means after
    s = w.sum()
    moments = moments_from_cumulants(cumulants_of_weights(w / s, 2 * n))
    try:
        with np.errstate(all="raise"):
            lt, mu, pi = _lpb_fit(moments, n)
        mixture = GammaMixture(shape=1.0 / lt, scales=mu * lt, mixture_weights=pi)
        fitted = mixture.moments(2 * n)
        if not np.allclose(fitted, moments, rtol=1e-6, atol=0):
            raise ArithmeticError("moment mismatch")
    except (ArithmeticError, FloatingPointError, np.linalg.LinAlgError, ValueError):
        return GammaMixture(
            shape=np.nan, scales=np.array([]), mixture_weights=np.array([]),
            fallback=True, fallback_approx=hall_buckley_eagleson(d),
        )
    mixture.scales = mixture.scales * s
    return mixture


def _imhof_truncation(w: np.ndarray, tol: float) -> float:
    # Imhof's tail bound 1 / (pi k U**k prod sqrt(w)), k = L/2, set equal to tol/2
    k = 0.5 * w.size
    log_u = (math.log(2.0 / (tol * math.pi * k)) - 0.5 * np.log(w).sum()) / k
    return math.exp(min(log_u, 700.0))


def imhof_survival(dist, x: float, tol: float = 1e-6, backend: str | None = None) -> float:
    """``P(Q > x)`` by numerical inversion of the characteristic function.

    The integral is truncated at the point where Imhof's tail bound falls
    below ``tol / 2``. When that point lies far out on a slowly decaying
    oscillatory tail (few weights), the tail is integrated exactly with
    QUADPACK's Fourier-integral routine instead of being truncated.

    :raises AccuracyError: if the combined error estimate exceeds ``tol``.
    """
    if not 0 < tol < 0.1:
        raise ValueError("tol must lie in (0, 0.1)")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    d = _as_dist(dist)
    if x <= 0:
        return 1.0
    w = d.positive
    # integrate in units of the largest weight
    scale = w.max()
    w = w / scale
    x = x / scale
    if backend is None:
        integrand = _kernels.imhof_integrand
    else:
        integrand = _kernels.get_backend(backend)[1]
    lam = tuple(float(v) for v in w)
    upper = _imhof_truncation(w, tol)
    split = 20.0 + 40.0 / x
    budget = tol / 4
    if upper <= split:
        val, err = integrate.quad(integrand, 0.0, upper, args=(0.0, x) + lam,
                                  limit=1000, epsabs=budget, epsrel=0.0)
        err += tol / 2
    else:
        val, err = integrate.quad(integrand, 0.0, split, args=(0.0, x) + lam,
                                  limit=1000, epsabs=budget, epsrel=0.0)
        # sin(phi - x u / 2) = sin(phi) cos(x u / 2) - cos(phi) sin(x u / 2)
        t_cos, e_cos = integrate.quad(integrand, split, np.inf, args=(1.0, x) + lam,
                                      weight="cos", wvar=0.5 * x, limlst=200,
                                      epsabs=budget)
        t_sin, e_sin = integrate.quad(integrand, split, np.inf, args=(2.0, x) + lam,
                                      weight="sin", wvar=0.5 * x, limlst=200,
                                      epsabs=budget)
        val += t_cos - t_sin
        err += e_cos + e_sin
    prob = min(max(0.5 + val / math.pi, 0.0), 1.0)
    err /= math.pi
    if err > tol:
        raise AccuracyError(f"Imhof integration error {err:.2e} exceeds tol {tol:.2e}",
                            best_estimate=prob, error_estimate=err)
    return prob


@dataclass
class ImhofApprox(_Approximation):
    """Adapter exposing :func:`imhof_survival` through the common interface."""

    dist: WeightedChiSquare
    tol: float = 1e-6
    method: str = "IMHOF"
    fallback: bool = False

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return imhof_survival(self.dist, float(x), self.tol)
        return np.array([imhof_survival(self.dist, float(v), self.tol) for v in x.ravel()]).reshape(x.shape)


def imhof_quantile(dist, prob: float, tol: float = 1e-8) -> float:
    """Smallest ``x`` with ``P(Q <= x) = prob`` under Imhof's inversion."""
    d = _as_dist(dist)
    target = 1.0 - prob
    mean, sd = d.mean(), math.sqrt(d.variance())
    hi = mean + 4 * sd
    while imhof_survival(d, hi, 1e-7) > target:
        hi *= 2
    return optimize.brentq(lambda v: imhof_survival(d, v, 1e-7) - target, 0.0, hi, xtol=tol)


def empirical_survival_oracle(dist, x: float, draws: int, rng: np.random.Generator) -> float:
    """Monte-Carlo estimate of ``P(Q > x)`` from ``draws`` simulated sums."""
    if draws < 10_000:
        raise ValueError("draws must be >= 1e4")
    d = _as_dist(dist)
    w = d.weights
    exceed = 0
    chunk = max(1, 4_000_000 // max(w.size, 1))
    remaining = draws
    while remaining:
        m = min(chunk, remaining)
        q = rng.standard_normal((m, w.size)) ** 2 @ w
        exceed += int(np.count_nonzero(q > x))
        remaining -= m
    return exceed / draws


def approximation(dist, method: str = "LPB") -> _Approximation:
    """Return the null approximation object for ``method``."""
    d = _as_dist(dist)
    method = method.upper()
    if method == "SW":
        return satterthwaite_welch(d)
    if method == "HBE":
        return hall_buckley_eagleson(d)
    if method == "WOODF":
        return wood_f(d)
    if method == "LPB":
        return lindsay_pilla_basak(d)
    if method == "IMHOF":
        return ImhofApprox(d)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
