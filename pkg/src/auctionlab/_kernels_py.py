"""Pure numpy/Python versions of the compiled kernels (same results, slower)."""

from __future__ import annotations

import numpy as np


def upper_hull(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Indices of the upper concave hull of points sorted by q (monotone chain)."""
    st: list[int] = []
    for i in range(len(q)):
        qi, ri = q[i], r[i]
        if st and q[st[-1]] == qi:
            if ri > r[st[-1]]:
                st.pop()
            else:
                continue
        while len(st) >= 2:
            a, b = st[-2], st[-1]
            cross = (q[b] - q[a]) * (ri - r[a]) - (r[b] - r[a]) * (qi - q[a])
            if cross >= 0:
                st.pop()
            else:
                break
        st.append(i)
    return np.array(st, dtype=np.int64)


def explicit_vcg(values: np.ndarray, sets: np.ndarray):
    """Welfare-maximising set index and VCG payments for every value profile."""
    N, n = values.shape
    member = ((sets[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    w = np.zeros((N, len(sets)))
    # sequential sums in buyer order, matching the compiled loop bit for bit
    for i in range(n):
        w = w + np.where(member[:, i][None, :], values[:, i:i + 1], 0.0)
    win = np.argmax(w, axis=1)
    best = w[np.arange(N), win]
    pay = np.zeros((N, n))
    for i in range(n):
        excl = np.where(member[:, i][None, :], 0.0, w).max(axis=1)
        excl = np.maximum(excl, 0.0)
        p = np.minimum(np.maximum(excl - (best - values[:, i]), 0.0), values[:, i])
        pay[:, i] = np.where(member[win, i], p, 0.0)
    return win.astype(np.int64), pay
