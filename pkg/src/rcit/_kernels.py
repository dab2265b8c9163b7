"""Backend selection for the hot kernels.

The compiled extension is preferred. Setting the environment variable
``RCIT_PURE_PYTHON=1`` forces the numpy fallback.
"""

from __future__ import annotations

import os

from scipy import LowLevelCallable

from rcit import _fallback

BACKEND = "python"
_ext = None

if os.environ.get("RCIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from rcit import _ext  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _ext = None


def get_backend(name: str | None = None):
    """Return ``(pi_moment, imhof_integrand)`` for the named backend.

    ``imhof_integrand`` is either a :class:`scipy.LowLevelCallable` or a plain
    Python callable; both accept ``(u, mode, x, *weights)`` through
    :func:`scipy.integrate.quad`'s ``args``.
    """
    name = name or BACKEND
    if name == "cython":
        if _ext is None:
            raise ImportError("compiled extension rcit._ext is not available")
        integrand = LowLevelCallable.from_cython(_ext, "imhof_integrand")
        return _ext.pi_moment, integrand
    if name == "python":
        return _fallback.pi_moment, _fallback.imhof_integrand
    raise ValueError(f"unknown backend {name!r}")


pi_moment, imhof_integrand = get_backend()
