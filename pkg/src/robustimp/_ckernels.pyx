# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch evaluation of piecewise-linear expected utilities.

Utilities come as padded knot arrays: row ``t`` of ``xs``/``ys`` holds the
knots of utility ``t``; trailing entries repeat the last knot.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _pl_eval(const double[:, ::1] xs, const double[:, ::1] ys,
                            double left, double right, Py_ssize_t t, Py_ssize_t K,
                            double x) noexcept nogil:
    cdef Py_ssize_t j
    if x < xs[t, 0]:
        return ys[t, 0] + left * (x - xs[t, 0])
    if x >= xs[t, K - 1]:
        return ys[t, K - 1] + right * (x - xs[t, K - 1])
    j = 0
    while xs[t, j + 1] <= x:
        j += 1
    return ys[t, j] + (ys[t, j + 1] - ys[t, j]) * (x - xs[t, j]) / (xs[t, j + 1] - xs[t, j])


def batch_expected_utilities(const double[:, ::1] xs, const double[:, ::1] ys,
                             const double[::1] left, const double[::1] right,
                             const double[:, ::1] payoffs, const double[:, ::1] beliefs):
    """``out[t, i] = sum_s beliefs[t, s] * u_t(payoffs[i, s])``."""
    cdef Py_ssize_t T = xs.shape[0], K = xs.shape[1]
    cdef Py_ssize_t k = payoffs.shape[0], n = payoffs.shape[1]
    cdef Py_ssize_t t, i, s
    cdef double acc
    out_arr = np.empty((T, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for t in range(T):
            for i in range(k):
                acc = 0.0
                for s in range(n):
                    if beliefs[t, s] != 0.0:
                        acc = acc + beliefs[t, s] * _pl_eval(xs, ys, left[t], right[t], t, K,
                                                             payoffs[i, s])
                out[t, i] = acc
    return out_arr


def first_chain_violation(const double[:, ::1] xs, const double[:, ::1] ys,
                          const double[::1] left, const double[::1] right,
                          const double[:, ::1] payoffs, const double[:, ::1] beliefs,
                          double eps):
    """Index of the first trial with ``a > max(alts) + eps`` and ``max(alts) > ahat + eps``.

    Row 0 of ``payoffs`` is ``a``, row 1 is ``ahat``, rows 2.. are the
    alternatives. Returns -1 when no trial qualifies.
    """
    cdef Py_ssize_t T = xs.shape[0], K = xs.shape[1]
    cdef Py_ssize_t k = payoffs.shape[0], n = payoffs.shape[1]
    cdef Py_ssize_t t, i, s
    cdef double acc, eu_a, eu_h, best
    cdef Py_ssize_t hit = -1
    with nogil:
        for t in range(T):
            best = -1e308
            eu_a = 0.0
            eu_h = 0.0
            for i in range(k):
                acc = 0.0
                for s in range(n):
                    if beliefs[t, s] != 0.0:
                        acc = acc + beliefs[t, s] * _pl_eval(xs, ys, left[t], right[t], t, K,
                                                             payoffs[i, s])
                if i == 0:
                    eu_a = acc
                elif i == 1:
                    eu_h = acc
                elif acc > best:
                    best = acc
            if eu_a > best + eps and best > eu_h + eps:
                hit = t
                break
    return hit
