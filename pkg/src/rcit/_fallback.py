"""Pure numpy implementations of the compiled kernels.

Selected automatically when the extension is not built, or when
``RCIT_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import numpy as np

_CHUNK_ROWS = 65536


def imhof_integrand(u: float, mode: float, x: float, *lams: float) -> float:
    lam = np.asarray(lams)
    if u == 0.0:
        if int(mode) == 0:
            return 0.5 * lam.sum() - 0.5 * x
        return 0.0
    lu = lam * u
    phi = 0.5 * np.arctan(lu).sum()
    denom = u * np.exp(0.25 * np.log1p(lu * lu).sum())
    if int(mode) == 0:
        return float(np.sin(phi - 0.5 * x * u) / denom)
    if int(mode) == 1:
        return float(np.sin(phi) / denom)
    return float(np.cos(phi) / denom)


def pi_moment(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, p = a.shape
    if b.shape[0] != n:
        raise ValueError("row mismatch")
    q = b.shape[1]
    out = np.zeros((p * q, p * q))
    # chunked so n = 1e6 does not allocate the full n x L product matrix
    for start in range(0, n, _CHUNK_ROWS):
        sa = a[start:start + _CHUNK_ROWS]
        sb = b[start:start + _CHUNK_ROWS]
        prod = (sa[:, :, None] * sb[:, None, :]).reshape(len(sa), p * q)
        out += prod.T @ prod
    out /= n
    return 0.5 * (out + out.T)
