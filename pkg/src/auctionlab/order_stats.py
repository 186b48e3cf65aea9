"""Order statistics of independent, possibly non-identical, buyers.

``F_(k)(v)`` is the CDF of the k-th largest value: the probability that fewer
than ``k`` buyers exceed ``v``.  Buyers with identical distributions are
grouped, so the count of buyers above ``v`` is a sum of binomials.  The sum is
tracked with a truncated convolution whose last state absorbs "at least k";
both the CDF and the survival function are then sums of nonnegative terms,
which keeps tiny tails accurate even for thousands of buyers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import bdtrc, gammaln, xlog1py, xlogy

from .dist_core import PiecewiseDistribution, quantile_grid
from .errors import ContractError, DomainError
from .family import Family, FamilyReport, TailSamples, check

Group = tuple[PiecewiseDistribution, int]


def group_buyers(dists: Sequence[PiecewiseDistribution]) -> list[Group]:
    """Collapse identical distributions into ``(dist, multiplicity)`` pairs."""
    order: list[PiecewiseDistribution] = []
    counts: dict[PiecewiseDistribution, int] = {}
    for d in dists:
        if d not in counts:
            order.append(d)
            counts[d] = 0
        counts[d] += 1
    return [(d, counts[d]) for d in order]


def _binom_parts(m: int, p: np.ndarray, k: int, q: np.ndarray | None = None):
    """pmf for 0..k-1 (shape (G, k)) and ``P(Bin >= j)`` for j = 1..k (shape (G, k)).

    ``q`` is the failure probability; passing it avoids forming ``1 - p``,
    which loses every digit when ``p`` is within rounding of one.
    """
    j = np.arange(k)[None, :]
    p = np.clip(p, 0.0, 1.0)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logc = gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1)
        if q is None:
            fail = xlog1py(m - j, -p)
        else:
            fail = xlogy(m - j, np.clip(q, 0.0, 1.0)[:, None])
        pmf = np.exp(logc + xlogy(j, p) + fail)
    pmf = np.where(j <= m, np.nan_to_num(pmf), 0.0)
    tail = np.nan_to_num(bdtrc(j, m, p))  # P(Bin > j) = P(Bin >= j + 1)
    return pmf, tail


def count_distribution(groups: Sequence[Group], probs: Sequence[np.ndarray], k: int,
                       comps: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """``P(N = j)`` for j < k and ``P(N >= k)`` in the last column, where ``N``
    counts successes with per-group probabilities ``probs`` (and optional
    exact complements ``comps``)."""
    G = len(probs[0])
    state = np.zeros((G, k + 1))
    state[:, 0] = 1.0
    if comps is None:
        comps = [None] * len(probs)
    for (_, m), p, c in zip(groups, probs, comps):
        pmf, tail = _binom_parts(m, np.asarray(p, dtype=float), k,
                                 None if c is None else np.asarray(c, dtype=float))
        new = np.zeros_like(state)
        new[:, k] = state[:, k]
        for i in range(k):
            si = state[:, i]
            for j in range(k - i):
                new[:, i + j] += si * pmf[:, j]
            new[:, k] += si * tail[:, k - i - 1]
        state = new
    return state


def order_cdf(groups: Sequence[Group], k: int, v, left: bool = False):
    """``(F_(k)(v), S_(k)(v))``; with ``left`` both are left limits at ``v``."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    n = sum(m for _, m in groups)
    if not 1 <= k <= n:
        raise DomainError(f"order index k={k} outside 1..{n}")
    probs = [np.asarray(d.sf_left(v) if left else d.sf(v), dtype=float) for d, _ in groups]
    comps = [np.asarray(d.cdf_left(v) if left else d.cdf(v), dtype=float) for d, _ in groups]
    st = count_distribution(groups, probs, k, comps)
    return st[:, :k].sum(axis=1), st[:, k]


def order_grid(dists: Sequence[PiecewiseDistribution], grid_size: int = 4096) -> np.ndarray:
    pts = []
    for d, _ in group_buyers(dists):
        q = quantile_grid(d, grid_size)
        pts.append(np.asarray(d.price(q[q > 0]), dtype=float))
        pts.append(d.characteristic_points())
    g = np.unique(np.concatenate(pts))
    return g[np.isfinite(g)]


@dataclass(frozen=True)
class GridDistribution:
    """Order-statistic CDF tabulated on a value grid (with left limits)."""

    grid: np.ndarray
    cdf_values: np.ndarray
    left_limits: np.ndarray
    sf_values: np.ndarray
    sf_left_values: np.ndarray
    r0: float = 0.0

    def tail_samples(self) -> TailSamples:
        return TailSamples(self.grid, self.sf_left_values, self.left_limits,
                           self.sf_values, self.cdf_values, self.r0)

    @property
    def support_inf(self) -> float:
        pos = np.nonzero(self.cdf_values > 0)[0]
        return float(self.grid[pos[0]]) if pos.size else float(self.grid[-1])

    def cdf(self, v):
        i = np.searchsorted(self.grid, v, side="right") - 1
        return np.where(i >= 0, self.cdf_values[np.maximum(i, 0)], 0.0)

    def to_json(self) -> dict:
        return {"grid": self.grid.tolist(), "cdf_values": self.cdf_values.tolist(),
                "left_limits": self.left_limits.tolist()}


def order_statistic(dists: Sequence[PiecewiseDistribution], k: int,
                    grid: np.ndarray | None = None, grid_size: int = 4096) -> GridDistribution:
    """Distribution of the k-th largest of independent draws, on ``grid``."""
    n = len(dists)
    if not 1 <= k <= n:
        raise DomainError(f"order index k={k} outside 1..{n}")
    groups = group_buyers(dists)
    g = order_grid(dists, grid_size) if grid is None else np.unique(np.asarray(grid, dtype=float))
    F, S = order_cdf(groups, k, g)
    Fl, Sl = order_cdf(groups, k, g, left=True)
    # the maximum inherits the summed tail revenue; deeper order statistics have none
    r0 = sum(m * d.revenue_at_zero for d, m in groups) if k == 1 else 0.0
    return GridDistribution(g, F, Fl, S, Sl, r0)


def first_vs_second_bound_check(dists: Sequence[PiecewiseDistribution],
                                grid: np.ndarray | None = None) -> float:
    """Minimum over the grid of ``F_(2) - F_(1) (1 - ln F_(1))``."""
    groups = group_buyers(dists)
    g = order_grid(dists, 1024) if grid is None else np.asarray(grid, dtype=float)
    margins = []
    for left in (False, True):
        F1, _ = order_cdf(groups, 1, g, left)
        if len(dists) >= 2:
            F2, _ = order_cdf(groups, 2, g, left)
        else:
            F2 = np.ones_like(F1)
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = np.where(F1 > 0, F1 - F1 * np.log(np.where(F1 > 0, F1, 1.0)), 0.0)
        margins.append(F2 - bound)
    return float(np.min(np.concatenate(margins)))


def closure_check(dists: Sequence[PiecewiseDistribution], k: int, family: Family | str,
                  grid_size: int = 4096) -> FamilyReport:
    """Build ``F_(k)`` and run the family check on its grid representation."""
    fam = Family.parse(family) if isinstance(family, str) else family
    if fam in (Family.REGULAR, Family.MHR) and len(group_buyers(dists)) > 1:
        raise ContractError(f"{fam.value} closure is only guaranteed for i.i.d. buyers")
    gd = order_statistic(dists, k, grid_size=grid_size)
    return check(gd, fam, grid_size)
