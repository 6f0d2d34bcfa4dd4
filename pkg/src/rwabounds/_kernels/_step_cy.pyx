# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernel for small dense complex linear ODE systems.

Hot loop of the time-ordered propagation: at the matrix sizes used here
(n = d^2 up to a few dozen) per-call overhead dominates numpy, so the
assembly and matrix products are hand-rolled C loops.
"""

import numpy as np

cimport cython

BACKEND = "cython"


cdef inline void _assemble(const double complex[:, :, ::1] mats,
                           const double complex[:, ::1] coeffs,
                           Py_ssize_t row, double complex[:, ::1] out) noexcept:
    cdef Py_ssize_t m = mats.shape[0]
    cdef Py_ssize_t n = mats.shape[1]
    cdef Py_ssize_t j, a, b
    cdef double complex c
    for a in range(n):
        for b in range(n):
            out[a, b] = 0
    for j in range(m):
        c = coeffs[row, j]
        if c == 0:
            continue
        for a in range(n):
            for b in range(n):
                out[a, b] = out[a, b] + c * mats[j, a, b]


cdef inline void _matmul(const double complex[:, ::1] a,
                         const double complex[:, ::1] b,
                         double complex[:, ::1] out) noexcept:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t k = b.shape[1]
    cdef Py_ssize_t i, j, l
    cdef double complex acc
    for i in range(n):
        for j in range(k):
            acc = 0
            for l in range(n):
                acc = acc + a[i, l] * b[l, j]
            out[i, j] = acc


def rk4_lincomb(mats, coeffs, steps, y0, snap_after):
    """See :func:`rwabounds._kernels._step_np.rk4_lincomb`; identical contract."""
    cdef double complex[:, :, ::1] mats_v = np.ascontiguousarray(mats, dtype=complex)
    cdef double complex[:, ::1] coeffs_v = np.ascontiguousarray(coeffs, dtype=complex)
    cdef double[::1] steps_v = np.ascontiguousarray(steps, dtype=float)
    cdef Py_ssize_t num_steps = steps_v.shape[0]
    if coeffs_v.shape[0] != 3 * num_steps:
        raise ValueError("coeffs must have 3 rows per step")
    if coeffs_v.shape[1] != mats_v.shape[0]:
        raise ValueError("coefficient count does not match number of matrices")

    y_arr = np.array(y0, dtype=complex, order="C")
    cdef double complex[:, ::1] y = y_arr
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t k = y.shape[1]
    if mats_v.shape[1] != n or mats_v.shape[2] != n:
        raise ValueError("matrix dimension does not match initial value")

    snap_arr = np.ascontiguousarray(snap_after, dtype=np.int64)
    cdef long long[::1] snap = snap_arr
    cdef Py_ssize_t num_snaps = snap.shape[0]
    out_arr = np.empty((num_snaps, n, k), dtype=complex)
    cdef double complex[:, :, ::1] out = out_arr

    cdef double complex[:, ::1] a1 = np.empty((n, n), dtype=complex)
    cdef double complex[:, ::1] a2 = np.empty((n, n), dtype=complex)
    cdef double complex[:, ::1] a3 = np.empty((n, n), dtype=complex)
    cdef double complex[:, ::1] k1 = np.empty((n, k), dtype=complex)
    cdef double complex[:, ::1] k2 = np.empty((n, k), dtype=complex)
    cdef double complex[:, ::1] k3 = np.empty((n, k), dtype=complex)
    cdef double complex[:, ::1] k4 = np.empty((n, k), dtype=complex)
    cdef double complex[:, ::1] tmp = np.empty((n, k), dtype=complex)

    cdef Py_ssize_t g = 0, i, a, b
    cdef double h
    while g < num_snaps and snap[g] == 0:
        out[g, :, :] = y
        g += 1
    for i in range(num_steps):
        h = steps_v[i]
        _assemble(mats_v, coeffs_v, 3 * i, a1)
        _assemble(mats_v, coeffs_v, 3 * i + 1, a2)
        _assemble(mats_v, coeffs_v, 3 * i + 2, a3)
        _matmul(a1, y, k1)
        for a in range(n):
            for b in range(k):
                tmp[a, b] = y[a, b] + 0.5 * h * k1[a, b]
        _matmul(a2, tmp, k2)
        for a in range(n):
            for b in range(k):
                tmp[a, b] = y[a, b] + 0.5 * h * k2[a, b]
        _matmul(a2, tmp, k3)
        for a in range(n):
            for b in range(k):
                tmp[a, b] = y[a, b] + h * k3[a, b]
        _matmul(a3, tmp, k4)
        for a in range(n):
            for b in range(k):
                y[a, b] = y[a, b] + (h / 6.0) * (
                    k1[a, b] + 2.0 * (k2[a, b] + k3[a, b]) + k4[a, b]
                )
        while g < num_snaps and snap[g] == i + 1:
            out[g, :, :] = y
            g += 1
    if g != num_snaps:
        raise ValueError("snap_after contains indices beyond the last step")
    return out_arr
