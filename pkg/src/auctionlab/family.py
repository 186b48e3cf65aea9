"""Membership tests for the regular, MHR, quasi-regular and quasi-MHR families.

Every check runs on a finite set of sample values.  At each sample ``v`` we keep
both one-sided versions of the tail, ``P(X >= v)`` and ``P(X > v)``, so atoms
and gaps in the support are seen from both sides.  The checks are

* regular: points ``(q, q v)`` lie on their upper concave hull;
* MHR: points ``(v, H(v))`` lie on their lower convex hull;
* quasi-regular: ``v P(X >= v) / P(X < v)`` is nonincreasing in ``v``
  (the revenue curve over ``1 - q`` is nondecreasing in ``q``);
* quasi-MHR: ``H(v) / v`` is nondecreasing in ``v``.

Independent alternatives (pointwise conditional-expected functions and
pairwise tail bounds) are available through ``method=`` for cross-checking.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .dist_core import (
    INF, PiecewiseDistribution, best_price, monopoly, partial_expectation,
    quantile_grid,
)
from .errors import ContractError, DomainError
from ._quad import integrate

TOL = 1e-7


class Family(str, enum.Enum):
    REGULAR = "regular"
    MHR = "mhr"
    QUASI_REGULAR = "quasi-regular"
    QUASI_MHR = "quasi-mhr"

    @classmethod
    def parse(cls, name: str) -> "Family":
        key = name.strip().lower().replace("_", "-")
        key = {"quasiregular": "quasi-regular", "quasimhr": "quasi-mhr",
               "q-reg": "quasi-regular", "q-mhr": "quasi-mhr"}.get(key, key)
        return cls(key)


@dataclass(frozen=True)
class FamilyReport:
    family: Family
    verdict: bool
    worst_violation: tuple[float, float]
    grid_size: int
    tolerance: float

    def to_json(self) -> dict:
        loc, mag = self.worst_violation
        return {"family": self.family.value, "verdict": bool(self.verdict),
                "worst_violation": {"location": _jsonable(loc), "magnitude": _jsonable(mag)},
                "grid_size": self.grid_size, "tolerance": self.tolerance}


def _jsonable(x: float):
    return "inf" if math.isinf(x) else float(x)


@dataclass(frozen=True)
class TailSamples:
    """Sample values with both one-sided tails; ``r0`` is the revenue at q = 0."""

    v: np.ndarray
    s_left: np.ndarray
    f_left: np.ndarray
    s_right: np.ndarray
    f_right: np.ndarray
    r0: float = 0.0


def tail_samples(dist, grid_size: int = 4096) -> TailSamples:
    """Collect the sample set for ``dist`` (a distribution or a grid CDF)."""
    if hasattr(dist, "tail_samples"):
        return dist.tail_samples()
    q = quantile_grid(dist, grid_size)
    v = [np.asarray(dist.price(q[q > 0]), dtype=float), dist.characteristic_points()]
    for s in dist.segments:
        if math.isfinite(s.hi):
            v.append(np.linspace(s.lo, s.hi, 65))
    v = np.unique(np.concatenate(v))
    v = v[np.isfinite(v)]
    return TailSamples(v, np.asarray(dist.sf_left(v)), np.asarray(dist.cdf_left(v)),
                       np.asarray(dist.sf(v)), np.asarray(dist.cdf(v)),
                       dist.revenue_at_zero)


def _interleave(ts: TailSamples):
    """Left then right point for every sample value, in ascending order."""
    n = len(ts.v)
    v = np.repeat(ts.v, 2)
    s = np.empty(2 * n)
    f = np.empty(2 * n)
    s[0::2], s[1::2] = ts.s_left, ts.s_right
    f[0::2], f[1::2] = ts.f_left, ts.f_right
    return v, s, f


def _cum_hazard(s: np.ndarray, f: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(f < 0.5, -np.log1p(-np.minimum(f, 0.5)), -np.log(np.maximum(s, 0.0)))


def _monotone_violation(x: np.ndarray, y: np.ndarray, increasing: bool):
    """Largest relative drop (or rise) of ``y`` along ``x``; returns (location, magnitude)."""
    if len(y) < 2:
        return (math.nan, 0.0)
    z = y if increasing else -y
    run = np.maximum.accumulate(z)
    drop = run[:-1] - z[1:]
    scale = np.maximum(np.maximum(np.abs(run[:-1]), np.abs(z[1:])), 1e-300)
    rel = drop / scale
    k = int(np.argmax(rel))
    return (float(x[k + 1]), float(max(rel[k], 0.0)))


def _hull_violation(x: np.ndarray, y: np.ndarray, scale: float, loc: np.ndarray | None = None):
    """Largest gap between points and their upper concave hull, relative to ``scale``."""
    if len(x) < 3:
        return (math.nan, 0.0)
    loc = x if loc is None else loc
    order = np.lexsort((y, x))
    x, y, loc = x[order], y[order], loc[order]
    keep = _accel.upper_hull(np.ascontiguousarray(x), np.ascontiguousarray(y))
    hull = np.interp(x, x[keep], y[keep])
    gap = (hull - y) / max(scale, 1e-300)
    k = int(np.argmax(gap))
    return (float(loc[k]), float(max(gap[k], 0.0)))


def _slope_violation(x: np.ndarray, y: np.ndarray):
    """Largest relative drop between consecutive chord slopes of ``y`` along ``x``.

    Unlike the hull gap this does not shrink with the grid spacing, so a small
    kink at a segment boundary is caught at any resolution.  Points closer than
    round-off are merged and vertical jumps are left to the hull test.
    """
    keep = np.concatenate([[True], np.diff(x) > 1e-9 * np.maximum(1.0, np.abs(x[1:]))])
    x, y = x[keep], y[keep]
    if len(x) < 3:
        return (math.nan, 0.0)
    slope = np.diff(y) / np.diff(x)
    ok = np.isfinite(slope)
    return _monotone_violation(x[1:][ok], slope[ok], True)


def _report(fam: Family, viol, grid_size: int) -> FamilyReport:
    return FamilyReport(fam, viol[1] <= TOL, viol, grid_size, TOL)


# -- primary checks ------------------------------------------------------------


def check_regular(dist, grid_size: int = 4096) -> FamilyReport:
    """Concavity of the revenue curve.

    The hull test runs twice: in ``q`` on ``q <= 3/4`` and in ``1 - q`` on
    ``q >= 1/4``.  Each coordinate is accurate on its own half, and concavity
    on two overlapping intervals is concavity on their union.
    """
    ts = tail_samples(dist, grid_size)
    v, s, f = _interleave(ts)
    ok = s > 0
    v, s, f = v[ok], s[ok], f[ok]
    r = v * s
    scale = float(max(np.max(r), ts.r0))
    lo = s <= 0.75
    q = np.concatenate([[0.0], s[lo]])
    ra = np.concatenate([[ts.r0], r[lo]])
    va = np.concatenate([[INF], v[lo]])
    a = _hull_violation(q, ra, scale, va)
    hi = s >= 0.25
    b = _hull_violation(f[hi], r[hi], scale, v[hi])
    return _report(Family.REGULAR, max(a, b, key=lambda t: t[1]), grid_size)


def _support_mask(v, s, f, ts):
    """Drop points strictly below the support (zero left mass) except its infimum."""
    inf_v = ts.v[np.argmax(ts.s_right < 1.0)] if np.any(ts.s_right < 1.0) else ts.v[-1]
    return (s > 0) & ((f > 0) | (v >= inf_v))


def check_mhr(dist, grid_size: int = 4096) -> FamilyReport:
    ts = tail_samples(dist, grid_size)
    v, s, f = _interleave(ts)
    keep = _support_mask(v, s, f, ts)
    v, h = v[keep], _cum_hazard(s[keep], f[keep])
    if len(v) < 3:
        return _report(Family.MHR, (math.nan, 0.0), grid_size)
    scale = float(np.max(np.abs(h))) or 1.0
    viol = max(_hull_violation(v, -h, scale), _slope_violation(v, h), key=lambda t: t[1])
    return _report(Family.MHR, viol, grid_size)


def check_quasi_regular(dist, grid_size: int = 4096, method: str = "revenue") -> FamilyReport:
    if method == "phi_ce":
        return _qr_phi_ce(dist, grid_size)
    if method == "tail_bound":
        return _qr_tail_bound(dist, grid_size)
    ts = tail_samples(dist, grid_size)
    v, s, f = _interleave(ts)
    ok = (s > 0) & (f > 0)
    c = v[ok] * s[ok] / f[ok]
    viol = _monotone_violation(v[ok], c, increasing=False)
    return _report(Family.QUASI_REGULAR, viol, grid_size)


def check_quasi_mhr(dist, grid_size: int = 4096, method: str = "hazard") -> FamilyReport:
    if getattr(dist, "support_inf", 0.0) < 0:
        raise ContractError("quasi-MHR check needs nonnegative support")
    if method == "h_ce":
        return _qmhr_h_ce(dist, grid_size)
    if method == "tail_bound":
        return _qmhr_tail_bound(dist, grid_size)
    ts = tail_samples(dist, grid_size)
    v, s, f = _interleave(ts)
    ok = (s > 0) & (v > 0)
    h = _cum_hazard(s[ok], f[ok]) / v[ok]
    viol = _monotone_violation(v[ok], h, increasing=True)
    return _report(Family.QUASI_MHR, viol, grid_size)


CHECKS = {
    Family.REGULAR: check_regular,
    Family.MHR: check_mhr,
    Family.QUASI_REGULAR: check_quasi_regular,
    Family.QUASI_MHR: check_quasi_mhr,
}


def check(dist, family: Family | str, grid_size: int = 4096) -> FamilyReport:
    fam = Family.parse(family) if isinstance(family, str) else family
    return CHECKS[fam](dist, grid_size)


def memberships(dist, grid_size: int = 4096) -> tuple[bool, bool, bool, bool]:
    return tuple(CHECKS[f](dist, grid_size).verdict for f in Family)


# -- alternative characterisations -------------------------------------------


def _pointwise_values(dist, grid_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-continuous ``(v, S, F)`` on the sample values and their midpoints."""
    ts = tail_samples(dist, grid_size)
    v = ts.v
    mid = 0.5 * (v[:-1] + v[1:])
    if hasattr(dist, "tail_samples"):
        # grid CDF: between grid points only the step value is known
        return v, ts.s_right, ts.f_right
    allv = np.unique(np.concatenate([v, mid]))
    return allv, np.asarray(dist.sf(allv)), np.asarray(dist.cdf(allv))


def _qr_phi_ce(dist, grid_size):
    v, s, f = _pointwise_values(dist, grid_size)
    ok = f > 0
    phi = -v[ok] * s[ok] / f[ok]
    return _report(Family.QUASI_REGULAR, _monotone_violation(v[ok], phi, True), grid_size)


def _qmhr_h_ce(dist, grid_size):
    v, s, f = _pointwise_values(dist, grid_size)
    ok = (v > 0) & (s > 0)
    h = _cum_hazard(s[ok], f[ok]) / v[ok]
    return _report(Family.QUASI_MHR, _monotone_violation(v[ok], h, True), grid_size)


def _thin(n: int, cap: int = 600) -> np.ndarray:
    return np.unique(np.linspace(0, n - 1, min(n, cap)).astype(int))


def _qr_tail_bound(dist, grid_size):
    """``F(u) <= u / (u + v (1 - F(v)) / F(v))`` for every pair ``u < v``."""
    v, s, f = _pointwise_values(dist, grid_size)
    ok = f > 0
    v, s, f = v[ok], s[ok], f[ok]
    idx = _thin(len(v))
    v, s, f = v[idx], s[idx], f[idx]
    k = v * s / f
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = v[:, None] / (v[:, None] + k[None, :])
    pair = v[:, None] < v[None, :]
    excess = np.where(pair, f[:, None] - bound, -INF)
    scale = np.where(pair, np.maximum(bound, 1e-300), 1.0)
    rel = np.nan_to_num(excess / scale, nan=-INF)
    i, j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    mag = max(float(rel[i, j]), 0.0) if pair.any() else 0.0
    return _report(Family.QUASI_REGULAR, (float(v[i]), mag), grid_size)


def _qmhr_tail_bound(dist, grid_size):
    """``S(u) >= S(v)^(u/v)`` for every pair ``u < v``, compared in log space."""
    v, s, f = _pointwise_values(dist, grid_size)
    ok = (v > 0) & (s > 0)
    v, s, f = v[ok], s[ok], f[ok]
    idx = _thin(len(v))
    v, h = v[idx], _cum_hazard(s[idx], f[idx])
    bound = (v[:, None] / v[None, :]) * h[None, :]
    pair = v[:, None] < v[None, :]
    excess = np.where(pair, h[:, None] - bound, -INF)
    scale = np.where(pair, np.maximum(np.abs(bound), 1e-300), 1.0)
    rel = excess / scale
    i, j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    mag = max(float(rel[i, j]), 0.0) if pair.any() else 0.0
    return _report(Family.QUASI_MHR, (float(v[i]), mag), grid_size)


# -- structural properties ---------------------------------------------------


def hierarchy_witnesses():
    from .catalog import hierarchy_witnesses as _hw
    return [(d, expected) for _, d, expected in _hw()]


def monopoly_quantile_bound(dist: PiecewiseDistribution, grid_size: int = 4096):
    """Monopoly quantile and whether it is at least ``1/e``."""
    if not check_quasi_mhr(dist, grid_size).verdict:
        raise ContractError("distribution is not quasi-MHR")
    q = monopoly(dist).q_star
    return q, bool(q >= 1 / math.e - 1e-9)


def revenue_welfare_ratios(dist: PiecewiseDistribution, t: float) -> tuple[float, float]:
    """Best price at or above ``t`` and price ``t`` itself, each over the welfare above ``t``."""
    welfare = partial_expectation(dist, t)
    if welfare <= 0:
        return INF, INF
    _, best = best_price(dist, 0.0, t)
    post = t * float(dist.sf_left(t))
    return best / welfare, post / welfare


def duplicating_expectations(dist: PiecewiseDistribution, t: float = 0.0) -> tuple[float, float]:
    """``E[phi(max) 1{max >= t}]`` and ``E[max 1{max >= t}]`` for two i.i.d. draws.

    Both are integrals against the density ``2 F f`` of the larger draw.
    """
    if any(v >= t and p > 0 for v, p in dist.atoms):
        raise ContractError("distribution must be atomless at and above t")
    e_phi = e_v = 0.0
    for s in dist._c["segs"]:
        lo, hi = max(s.lo, t), s.hi
        if hi <= lo:
            continue

        def dens(x):
            return 2.0 * dist.cdf(x) * dist.pdf(x)

        def phi_part(x):
            # phi * f = v f - S
            return 2.0 * dist.cdf(x) * (x * dist.pdf(x) - dist.sf(x))

        e_v += integrate(lambda x: x * dens(x), lo, hi, scale=max(lo, 1.0))
        e_phi += integrate(phi_part, lo, hi, scale=max(lo, 1.0))
    if e_v <= 0:
        raise DomainError("conditioning event has probability zero")
    return e_phi, e_v


def duplicating_virtual_ratio(dist: PiecewiseDistribution, t: float = 0.0) -> float:
    e_phi, e_v = duplicating_expectations(dist, t)
    return e_phi / e_v
