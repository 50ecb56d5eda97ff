# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: fused map evaluation and escape classification.

Mirrors qrsin._kernels_py operation by operation; see that module for the
semantics.  Scalar libm calls here may differ from numpy's vectorized
transcendentals by a few ulps.
"""

import numpy as np

cimport cython
from libc.math cimport exp, fabs, floor, fmod, sqrt

BACKEND = "cython"

cdef double _RADIAL_EPS = 1e-300


cdef void _map_one(const double* x, double* y, Py_ssize_t d, double lam) noexcept nogil:
    cdef Py_ssize_t j
    cdef int par = 0
    cdef double m, val, a, t, vd, ninf = 0.0, n2s = 0.0, n2, s, a2, b, den, yd, scale

    t = fabs(x[d - 1])
    if x[d - 1] < 0.0:
        par = 1
    for j in range(d - 1):
        m = floor((x[j] + 1.0) * 0.5)
        val = x[j] - 2.0 * m
        if fmod(m, 2.0) != 0.0:
            val = -val
            par += 1
        y[j] = val
        a = fabs(val)
        if a > ninf:
            ninf = a
        n2s += val * val

    vd = (t if t <= 1.0 else 1.0) - 1.0
    a = fabs(vd)
    if a > ninf:
        ninf = a
    n2s += vd * vd
    n2 = sqrt(n2s)
    s = ninf / n2 if n2 > _RADIAL_EPS else 0.0

    a2 = 0.0
    for j in range(d - 1):
        y[j] = s * y[j]
        a2 += y[j] * y[j]
    b = s * vd
    den = (1.0 - b) * (1.0 - b) + a2
    yd = (1.0 - a2 - b * b) / den

    scale = lam if t <= 1.0 else lam * exp(t - 1.0)
    for j in range(d - 1):
        y[j] = y[j] * (2.0 * scale / den)
    if par % 2 != 0:
        yd = -yd
    y[d - 1] = scale * yd


def map_batch(pts, double lam):
    """Apply f = lam * F to each row of an (n, d) float64 array."""
    cdef double[:, ::1] x = np.ascontiguousarray(pts, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            _map_one(&x[i, 0], &o[i, 0], d, lam)
    return out


def classify_escape(pts, double lam, int max_iter, double cap):
    """Escape step (or -1) and final |x_d| per starting point; see numpy twin."""
    cdef double[:, ::1] x = np.ascontiguousarray(pts, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j
    esc_arr = np.full(n, -1, dtype=np.int32)
    height_arr = np.empty(n, dtype=np.float64)
    cdef int[::1] esc = esc_arr
    cdef double[::1] height = height_arr
    cur_buf = np.empty(d, dtype=np.float64)
    nxt_buf = np.empty(d, dtype=np.float64)
    cdef double[::1] cur = cur_buf
    cdef double[::1] nxt = nxt_buf
    cdef int k
    with nogil:
        for i in range(n):
            for j in range(d):
                cur[j] = x[i, j]
            for k in range(max_iter + 1):
                if fabs(cur[d - 1]) >= cap:
                    esc[i] = k
                    break
                if k == max_iter:
                    break
                _map_one(&cur[0], &nxt[0], d, lam)
                for j in range(d):
                    cur[j] = nxt[j]
            height[i] = fabs(cur[d - 1])
    return esc_arr, height_arr
