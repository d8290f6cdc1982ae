# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.

Summation order is fixed (row-major, single thread) so results are
bitwise reproducible across processes.
"""
import numpy as np

from libc.math cimport exp


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


def logistic_gd(const double[:, ::1] X, const double[::1] y, const double[::1] w,
                double learning_rate, Py_ssize_t epochs, double l2):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t i, j, k, epoch
    cdef double total = 0.0, z, r, bias = 0.0, gbias
    coef_arr = np.zeros(d, dtype=np.float64)
    grad_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] coef = coef_arr
    cdef double[::1] grad = grad_arr

    # encoded tables are mostly one-hot zeros; iterate nonzeros only
    mask = np.asarray(X) != 0.0
    indptr_arr = np.zeros(n + 1, dtype=np.intp)
    np.cumsum(mask.sum(axis=1), out=indptr_arr[1:])
    cdef Py_ssize_t[::1] indptr = indptr_arr
    cdef Py_ssize_t[::1] indices = np.nonzero(mask)[1].astype(np.intp)
    cdef double[::1] values = np.ascontiguousarray(np.asarray(X)[mask])

    for i in range(n):
        total += w[i]

    with nogil:
        for epoch in range(epochs):
            for j in range(d):
                grad[j] = 0.0
            gbias = 0.0
            for i in range(n):
                if w[i] == 0.0:
                    continue
                z = bias
                for k in range(indptr[i], indptr[i + 1]):
                    z += values[k] * coef[indices[k]]
                r = w[i] * (_sigmoid(z) - y[i])
                gbias += r
                for k in range(indptr[i], indptr[i + 1]):
                    grad[indices[k]] += r * values[k]
            for j in range(d):
                coef[j] -= learning_rate * (grad[j] / total + l2 * coef[j])
            bias -= learning_rate * (gbias / total)
    return coef_arr, bias


def dominance_counts(const double[::1] a, const double[::1] b):
    """Return (#{a_i > b_j}, #{a_i < b_j}) over all cross pairs.

    Both samples are sorted, then one merge-style sweep counts, for each
    a_i, the b values strictly below it and strictly above it.
    """
    cdef double[::1] sa = np.sort(np.asarray(a))
    cdef double[::1] sb = np.sort(np.asarray(b))
    cdef Py_ssize_t i, lo = 0, hi = 0, n = sa.shape[0], m = sb.shape[0]
    cdef long long gt = 0, lt = 0
    cdef double x
    with nogil:
        for i in range(n):
            x = sa[i]
            while lo < m and sb[lo] < x:
                lo += 1
            if hi < lo:
                hi = lo
            while hi < m and sb[hi] <= x:
                hi += 1
            gt += lo
            lt += m - hi
    return gt, lt


def confusion_by_group(const long[::1] codes, const signed char[::1] y_true,
                       const signed char[::1] y_pred, Py_ssize_t n_groups):
    """Per-group (TP, FP, FN, TN) counts as an (n_groups, 4) int64 array."""
    out_arr = np.zeros((n_groups, 4), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    cdef Py_ssize_t i, g
    cdef bint bad = False
    with nogil:
        for i in range(codes.shape[0]):
            g = codes[i]
            if g < 0 or g >= n_groups:
                bad = True
                break
            # column: 0 TP, 1 FP, 2 FN, 3 TN
            out[g, 2 * (1 - y_pred[i]) + (1 - y_true[i])] += 1
    if bad:
        raise ValueError(f"group code out of range [0, {n_groups})")
    return out_arr
