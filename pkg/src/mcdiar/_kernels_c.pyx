# cython: language_level=3
"""Compiled kernels for the hot inner loops.

directed_hausdorff uses the exact early-break scan: once a row of `a` finds a
neighbour in `b` closer than the current max-of-mins, that row cannot raise
the result and the inner loop stops. Output is identical to the brute-force
definition; only the visited-pair count changes.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, log, sqrt

cnp.import_array()

BACKEND = "compiled"

DEF TWO_PI = 6.283185307179586477


def directed_hausdorff(a, b):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] aa = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] bb = np.ascontiguousarray(b, dtype=np.float64)
    if aa.shape[0] == 0 or bb.shape[0] == 0:
        raise ValueError("empty matrix")
    if aa.shape[1] != bb.shape[1]:
        raise ValueError("column counts differ")
    cdef Py_ssize_t m1 = aa.shape[0], m2 = bb.shape[0], n = aa.shape[1]
    cdef Py_ssize_t i, j, d
    cdef double cmax_sq = 0.0, cmin_sq, sq, diff
    cdef bint row_skipped, cut
    with nogil:
        for i in range(m1):
            cmin_sq = INFINITY
            row_skipped = False
            for j in range(m2):
                sq = 0.0
                cut = False
                for d in range(n):
                    diff = aa[i, d] - bb[j, d]
                    sq += diff * diff
                    if sq >= cmin_sq:
                        cut = True  # full distance cannot improve this row's min
                        break
                if cut:
                    continue
                if sq < cmax_sq:
                    row_skipped = True  # row min <= sq < cmax; cannot raise the max
                    break
                cmin_sq = sq
            if not row_skipped and cmin_sq > cmax_sq:
                cmax_sq = cmin_sq
    return sqrt(cmax_sq)


def gaussian_loglik_sum(x, mean, var):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xx = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] mu = np.ascontiguousarray(mean, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] vv = np.ascontiguousarray(var, dtype=np.float64)
    cdef Py_ssize_t m = xx.shape[0], n = xx.shape[1]
    cdef Py_ssize_t i, d
    cdef double log_norm = 0.0, total = 0.0, quad, diff
    with nogil:
        for d in range(n):
            log_norm += log(TWO_PI * vv[d])
        log_norm *= -0.5
        for i in range(m):
            quad = 0.0
            for d in range(n):
                diff = xx[i, d] - mu[d]
                quad += diff * diff / vv[d]
            total += log_norm - 0.5 * quad
    return total


def gmm2_loglik_sum(x, weights, means, variances):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xx = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] ww = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] mu = np.ascontiguousarray(means, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] vv = np.ascontiguousarray(variances, dtype=np.float64)
    cdef Py_ssize_t m = xx.shape[0], n = xx.shape[1]
    cdef Py_ssize_t i, d, k
    cdef double total = 0.0, diff, quad, hi
    cdef double lp[2]
    cdef double log_norm[2]
    with nogil:
        for k in range(2):
            log_norm[k] = 0.0
            for d in range(n):
                log_norm[k] += log(TWO_PI * vv[k, d])
            log_norm[k] = log(ww[k]) - 0.5 * log_norm[k]
        for i in range(m):
            for k in range(2):
                quad = 0.0
                for d in range(n):
                    diff = xx[i, d] - mu[k, d]
                    quad += diff * diff / vv[k, d]
                lp[k] = log_norm[k] - 0.5 * quad
            hi = lp[0] if lp[0] > lp[1] else lp[1]
            total += hi + log(exp(lp[0] - hi) + exp(lp[1] - hi))
    return total
