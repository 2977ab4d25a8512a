# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same contracts as ``_pykernels``."""
import numpy as np

from libc.math cimport INFINITY, NAN
from libc.stdlib cimport malloc, free


cdef inline double _wsum(const double* x, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef double acc = x[lo]
    cdef Py_ssize_t j
    for j in range(lo + 1, hi):
        acc += x[j]
    return acc


def robust_scores(dists, Py_ssize_t kprime):
    cdef const double[:, :, ::1] d = np.ascontiguousarray(dists, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0], c = d.shape[1], k = d.shape[2]
    out = np.empty((n, c))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double width = k - 2 * kprime
    with nogil:
        for i in range(n):
            for j in range(c):
                o[i, j] = _wsum(&d[i, j, 0], kprime, k - kprime) / width
    return out


def certify_batch(dists, predicted, Py_ssize_t kprime, bint group):
    cdef const double[:, :, ::1] d = np.ascontiguousarray(dists, dtype=np.float64)
    cdef const long long[::1] pred = np.ascontiguousarray(predicted, dtype=np.int64)
    cdef Py_ssize_t n = d.shape[0], c = d.shape[1], k = d.shape[2]
    out = np.zeros(n, dtype=np.int64)
    cdef long long[::1] o = out
    cdef double width = k - 2 * kprime
    cdef double* up = <double*> malloc((kprime + 1) * sizeof(double))
    cdef double* low = <double*> malloc((kprime + 1) * sizeof(double))
    cdef Py_ssize_t i, j, t, s, y
    cdef double m
    cdef bint ok
    if up == NULL or low == NULL:
        free(up)
        free(low)
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                y = pred[i]
                for t in range(kprime + 1):
                    up[t] = _wsum(&d[i, y, 0], kprime + t, k - kprime + t) / width
                for t in range(kprime + 1):
                    ok = True
                    if group:
                        for j in range(c):
                            if j == y:
                                continue
                            for s in range(t + 1):
                                m = _wsum(&d[i, j, 0], kprime - (t - s), k - kprime - (t - s)) / width
                                if not (up[s] < m):
                                    ok = False
                                    break
                            if not ok:
                                break
                    else:
                        m = INFINITY
                        for j in range(c):
                            if j == y:
                                continue
                            low[t] = _wsum(&d[i, j, 0], kprime - t, k - kprime - t) / width
                            if low[t] < m:
                                m = low[t]
                        ok = up[t] < m
                    if not ok:
                        break
                    o[i] = t
    finally:
        free(up)
        free(low)
    return out


def extrema(d_in, Py_ssize_t budget, candidates):
    cdef const double[::1] d = np.ascontiguousarray(d_in, dtype=np.float64)
    cdef const double[::1] cand = np.ascontiguousarray(candidates, dtype=np.float64)
    cdef Py_ssize_t k = d.shape[0], m = cand.shape[0]
    cdef Py_ssize_t kmax = (k - 1) // 2
    hi_arr = np.full(kmax + 1, np.nan)
    lo_arr = np.full(kmax + 1, np.nan)
    if budget > kmax:
        return hi_arr, lo_arr
    cdef double[::1] hi = hi_arr
    cdef double[::1] lo = lo_arr
    cdef Py_ssize_t kp, i, j, p
    for kp in range(budget, kmax + 1):
        hi[kp] = -INFINITY
        lo[kp] = INFINITY

    cdef Py_ssize_t* pos = <Py_ssize_t*> malloc((budget + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t* digit = <Py_ssize_t*> malloc((budget + 1) * sizeof(Py_ssize_t))
    cdef double* buf = <double*> malloc(k * sizeof(double))
    cdef double v, mean
    cdef bint more
    if pos == NULL or digit == NULL or buf == NULL:
        free(pos)
        free(digit)
        free(buf)
        raise MemoryError()
    try:
        with nogil:
            for i in range(budget):
                pos[i] = i
            while True:
                for i in range(budget):
                    digit[i] = 0
                while True:
                    # build tuple then insertion-sort it
                    for i in range(k):
                        buf[i] = d[i]
                    for i in range(budget):
                        buf[pos[i]] = cand[digit[i]]
                    for i in range(1, k):
                        v = buf[i]
                        j = i - 1
                        while j >= 0 and buf[j] > v:
                            buf[j + 1] = buf[j]
                            j -= 1
                        buf[j + 1] = v
                    for kp in range(budget, kmax + 1):
                        mean = _wsum(buf, kp, k - kp) / (k - 2 * kp)
                        if mean > hi[kp]:
                            hi[kp] = mean
                        if mean < lo[kp]:
                            lo[kp] = mean
                    # mixed-radix increment, last digit fastest
                    p = budget - 1
                    while p >= 0:
                        digit[p] += 1
                        if digit[p] < m:
                            break
                        digit[p] = 0
                        p -= 1
                    if p < 0:
                        break
                # next lexicographic combination
                more = False
                p = budget - 1
                while p >= 0:
                    if pos[p] < k - budget + p:
                        pos[p] += 1
                        for j in range(p + 1, budget):
                            pos[j] = pos[j - 1] + 1
                        more = True
                        break
                    p -= 1
                if not more:
                    break
    finally:
        free(pos)
        free(digit)
        free(buf)
    return hi_arr, lo_arr
