# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot loops.

``imhof_integrand`` is exported through the C API so that QUADPACK can call it
directly via :class:`scipy.LowLevelCallable` without re-entering Python.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan, sin, cos, log, exp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

cdef enum:
    BLOCK = 256


def _pair_index(int m):
    """``idx[i, k]`` = position of the unordered pair ``{i, k}`` in row-major upper-triangle order."""
    idx = np.empty((m, m), dtype=np.intp)
    cdef int i, k, u = 0
    for i in range(m):
        for k in range(i, m):
            idx[i, k] = u
            idx[k, i] = u
            u += 1
    return idx


cdef api double imhof_integrand(int n, double *xx) noexcept nogil:
    # xx = (u, mode, x, lam_1, ..., lam_L)
    # mode 0: sin(theta(u)) / (u rho(u))
    # mode 1: sin(phi(u)) / (u rho(u))   (cosine-weighted tail piece)
    # mode 2: cos(phi(u)) / (u rho(u))   (sine-weighted tail piece)
    cdef double u = xx[0]
    cdef int mode = <int>xx[1]
    cdef double x = xx[2]
    cdef double phi = 0.0
    cdef double log_rho = 0.0
    cdef double lu
    cdef int i
    if u == 0.0:
        if mode == 0:
            for i in range(3, n):
                phi += xx[i]
            return 0.5 * phi - 0.5 * x
        return 0.0
    for i in range(3, n):
        lu = xx[i] * u
        phi += atan(lu)
        log_rho += log(1.0 + lu * lu)
    phi *= 0.5
    cdef double denom = u * exp(0.25 * log_rho)
    if mode == 0:
        return sin(phi - 0.5 * x * u) / denom
    elif mode == 1:
        return sin(phi) / denom
    return cos(phi) / denom


def pi_moment(const double[:, ::1] a, const double[:, ::1] b):
    """Second-moment matrix of the per-row vectorised outer products of a and b.

    Equivalent to ``P.T @ P / n`` with ``P[r, i*q + j] = a[r, i] * b[r, j]``.
    Entry ``((i, j), (k, l))`` is the mean of ``a_i a_k b_j b_l``, so only the
    unordered pairs ``{i, k}`` and ``{j, l}`` matter. Rows are processed in
    blocks: the pair products of one block feed a small dgemm, and the reduced
    matrix is expanded at the end.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef int p = <int>a.shape[1]
    cdef int q = <int>b.shape[1]
    if b.shape[0] != n:
        raise ValueError("row mismatch")
    cdef int pa = p * (p + 1) // 2
    cdef int pb = q * (q + 1) // 2
    # column-major accumulator: red[u + v * pa] = sum_r aa[r, u] * bb[r, v]
    red_arr = np.zeros(pa * pb, dtype=np.float64)
    aa_arr = np.empty(BLOCK * pa, dtype=np.float64)
    bb_arr = np.empty(BLOCK * pb, dtype=np.float64)
    cdef double[::1] red = red_arr
    cdef double[::1] aa = aa_arr
    cdef double[::1] bb = bb_arr
    cdef Py_ssize_t start, r
    cdef int rows, i, k, u
    cdef double one = 1.0
    cdef char tn = b'N'
    cdef char tt = b'T'
    with nogil:
        start = 0
        while start < n:
            rows = <int>min(BLOCK, n - start)
            for r in range(rows):
                u = 0
                for i in range(p):
                    for k in range(i, p):
                        aa[r * pa + u] = a[start + r, i] * a[start + r, k]
                        u += 1
                u = 0
                for i in range(q):
                    for k in range(i, q):
                        bb[r * pb + u] = b[start + r, i] * b[start + r, k]
                        u += 1
            # aa is column-major (pa x rows), bb column-major (pb x rows)
            dgemm(&tn, &tt, &pa, &pb, &rows, &one, &aa[0], &pa, &bb[0], &pb, &one, &red[0], &pa)
            start += rows
    reduced = red_arr.reshape(pb, pa).T / n
    ia = _pair_index(p)
    ib = _pair_index(q)
    # out[i, j, k, l] = reduced[{i, k}, {j, l}]
    return reduced[ia[:, None, :, None], ib[None, :, None, :]].reshape(p * q, p * q)
