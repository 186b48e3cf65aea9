# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: concave hull of revenue samples and batched VCG."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fmax, fmin

cnp.import_array()


def upper_hull(const double[::1] q, const double[::1] r):
    """Indices of the upper concave hull of points sorted by q (monotone chain)."""
    cdef Py_ssize_t n = q.shape[0], i, k = 0, a, b
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] st = out
    cdef double cross
    for i in range(n):
        if k > 0 and q[st[k - 1]] == q[i]:
            if r[i] > r[st[k - 1]]:
                k -= 1
            else:
                continue
        while k >= 2:
            a = st[k - 2]
            b = st[k - 1]
            # drop b unless it lies strictly above the chord a -> i
            cross = (q[b] - q[a]) * (r[i] - r[a]) - (r[b] - r[a]) * (q[i] - q[a])
            if cross >= 0:
                k -= 1
            else:
                break
        st[k] = i
        k += 1
    return out[:k].copy()


def explicit_vcg(const double[:, ::1] values, const cnp.int64_t[::1] sets):
    """Welfare-maximising set index and VCG payments for every value profile.

    ``sets`` are bitmasks in tie-break order; the first maximiser wins.
    """
    cdef Py_ssize_t N = values.shape[0], n = values.shape[1], K = sets.shape[0]
    cdef Py_ssize_t row, s, i
    cdef cnp.ndarray[cnp.int64_t, ndim=1] win_np = np.empty(N, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pay_np = np.zeros((N, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_np = np.empty(K, dtype=np.float64)
    cdef cnp.int64_t[::1] win = win_np
    cdef double[:, ::1] pay = pay_np
    cdef double[::1] w = w_np
    cdef double best, other, acc
    cdef Py_ssize_t arg
    cdef cnp.int64_t m
    for row in range(N):
        best = -1.0
        arg = 0
        for s in range(K):
            m = sets[s]
            acc = 0.0
            for i in range(n):
                if (m >> i) & 1:
                    acc = acc + values[row, i]
            w[s] = acc
            if acc > best:
                best = acc
                arg = s
        win[row] = arg
        m = sets[arg]
        for i in range(n):
            if (m >> i) & 1:
                other = 0.0
                for s in range(K):
                    if not ((sets[s] >> i) & 1) and w[s] > other:
                        other = w[s]
                pay[row, i] = fmin(fmax(other - (best - values[row, i]), 0.0), values[row, i])
    return win_np, pay_np
