"""Random Fourier features for the Gaussian RBF kernel.

The kernel convention is ``k(x, y) = exp(-||x - y||**2 / sigma)``, where
``sigma`` is the *squared* median pairwise distance of a subsample.
Frequencies are drawn with variance ``2 / sigma`` per entry, which makes
``E[zeta(x) zeta(y)] = k(x, y)`` for ``zeta(x) = sqrt(2) cos(w.x + b)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from rcit.exceptions import InvalidInputError

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class FourierFeatureMap:
    """Sampled frequencies ``(d, p)``, phases ``(d,)`` and bandwidth."""

    frequencies: np.ndarray
    phases: np.ndarray
    bandwidth: float

    def __post_init__(self):
        if self.frequencies.ndim != 2 or self.frequencies.shape[0] != self.phases.shape[0]:
            raise InvalidInputError("frequencies must be (d, p) with d == len(phases)")
        if not self.bandwidth > 0:
            raise InvalidInputError("bandwidth must be positive")
        if np.any(self.phases < 0) or np.any(self.phases >= 2 * np.pi):
            raise InvalidInputError("phases must lie in [0, 2*pi)")

    @property
    def num_features(self) -> int:
        return self.frequencies.shape[0]

    @property
    def dim(self) -> int:
        return self.frequencies.shape[1]

    def __call__(self, data) -> np.ndarray:
        return apply_fourier_map(self, data)


def _as_2d(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidInputError("expected a 2-D sample matrix")
    return arr


def median_bandwidth(data, max_samples: int = 500) -> float:
    """Squared median Euclidean distance among the first ``max_samples`` rows.

    Returns 1.0 when the median distance is zero.
    """
    x = _as_2d(data)
    if x.shape[0] < 2:
        raise InvalidInputError("median_bandwidth needs at least 2 rows")
    if max_samples < 2:
        raise InvalidInputError("max_samples must be >= 2")
    med = float(np.median(pdist(x[:max_samples])))
    if med == 0.0:
        return 1.0
    return med * med


def sample_fourier_map(p: int, d: int, sigma: float, rng: np.random.Generator) -> FourierFeatureMap:
    if p < 1 or d < 1:
        raise InvalidInputError("p and d must be >= 1")
    if not sigma > 0:
        raise InvalidInputError("sigma must be positive")
    w = rng.normal(0.0, np.sqrt(2.0 / sigma), size=(d, p))
    b = rng.uniform(0.0, 2 * np.pi, size=d)
    return FourierFeatureMap(w, b, float(sigma))


def apply_fourier_map(fmap: FourierFeatureMap, data) -> np.ndarray:
    """Evaluate ``sqrt(2) cos(x @ W.T + b)`` row-wise; result is ``(n, d)``."""
    x = _as_2d(data)
    if x.shape[1] != fmap.dim:
        raise InvalidInputError(f"data has {x.shape[1]} columns, map expects {fmap.dim}")
    proj = x @ fmap.frequencies.T
    proj += fmap.phases
    np.cos(proj, out=proj)
    proj *= SQRT2
    return proj


def standardize_columns(data) -> np.ndarray:
    """Zero mean, unit sample (n - 1) variance per column; constant columns become 0."""
    x = _as_2d(data)
    n = x.shape[0]
    if n < 2:
        raise InvalidInputError("standardize_columns needs at least 2 rows")
    # exact power-of-two rescale so tiny columns do not square into subnormals
    _, expo = np.frexp(np.abs(x).max(axis=0))
    x = np.ldexp(x, -expo)
    centered = x - x.mean(axis=0)
    sd = centered.std(axis=0, ddof=1)
    # relative guard: columns equal up to rounding count as constant
    const = sd <= 1e-12
    sd = np.where(const, 1.0, sd)
    out = centered / sd
    out[:, const] = 0.0
    return out


def random_features(data, num_features: int, rng: np.random.Generator,
                    max_samples: int = 500) -> tuple[np.ndarray, FourierFeatureMap]:
    """Standardised Fourier features of already-standardised ``data``.

    Bandwidth from :func:`median_bandwidth`, map from
    :func:`sample_fourier_map`; the features are standardised again.
    """
    x = _as_2d(data)
    sigma = median_bandwidth(x, max_samples)
    fmap = sample_fourier_map(x.shape[1], num_features, sigma, rng)
    return standardize_columns(apply_fourier_map(fmap, x)), fmap
