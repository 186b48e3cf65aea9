"""Expected revenue of single-item mechanisms.

Notation: ``S1`` and ``S2`` are survival functions of the largest and second
largest value.  Revenue formulas used here:

* uniform pricing at ``p``: ``p * P(max >= p)``;
* second price with reserve ``r``: ``r * P(max >= r) + int_r^inf S2``;
* identity pricing: ``1/2 int S1^2 + 1/2 sum_x x * (jump of F1 at x)^2``;
* optimal mechanism: ``sum_i Rbar_i(0) + E[max(0, max_i phibar_i(q_i))]``
  where ``phibar_i`` is the slope of buyer i's ironed revenue curve and
  ``q_i`` is uniform.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import optimize

from . import _mc
from ._quad import _panel_sums, integrate
from .dist_core import (
    INF, PiecewiseDistribution, Rational, best_price, iron, monopoly, quantile_grid,
)
from .errors import CapabilityError, DivergenceError, DomainError
from .order_stats import Group, group_buyers, order_cdf

DEFAULT_GRID = 4096
TIE = 1e-9


class Method(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    QUADRATURE = "Quadrature"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class MechanismReport:
    mechanism: str
    revenue: float
    optimizer: Any = None
    method: Method = Method.QUADRATURE
    mc_samples: int = 0
    std_error: float | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"mechanism": self.mechanism, "revenue": _j(self.revenue),
                "optimizer": _j(self.optimizer), "method": self.method.value,
                "mc_samples": self.mc_samples,
                "std_error": None if self.std_error is None else _j(self.std_error),
                "seed": self.seed, "extra": _j(self.extra)}


def _j(x):
    if isinstance(x, dict):
        return {k: _j(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_j(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    return x


# -- shared helpers ------------------------------------------------------------


def _breakpoints(groups: Sequence[Group]) -> np.ndarray:
    pts = [d.characteristic_points() for d, _ in groups]
    return np.unique(np.concatenate(pts)) if pts else np.array([])


def _n(groups: Sequence[Group]) -> int:
    return sum(m for _, m in groups)


def _s1_left(groups, v):
    return order_cdf(groups, 1, v, left=True)[1]


def _s2(groups, v):
    if _n(groups) < 2:
        return np.zeros_like(np.atleast_1d(np.asarray(v, dtype=float)))
    return order_cdf(groups, 2, v)[1]


def _tail_revenue(groups) -> float:
    """``lim p * P(max >= p)``: the revenue of an arbitrarily high price."""
    return float(sum(m * d.revenue_at_zero for d, m in groups))


def _scale(groups) -> float:
    vals = []
    for d, _ in groups:
        vals.append(float(d.price(0.5)))
    return max(max(vals), 1e-6)


def _candidate_prices(groups, per_dist: int = 512) -> np.ndarray:
    """Characteristic points plus prices at a spread of quantiles of each buyer
    and of the maximum."""
    pts = [_breakpoints(groups), np.array([0.0])]
    n = _n(groups)
    for d, m in groups:
        q = quantile_grid(d, per_dist)
        q = q[q > 0]
        pts.append(np.asarray(d.price(q), dtype=float))
        if n > 1:
            # quantiles relevant for the top of n draws
            qq = np.clip(q / n, 1e-300, 1.0)
            pts.append(np.asarray(d.price(qq), dtype=float))
    g = np.unique(np.concatenate(pts))
    return g[np.isfinite(g)]


def _pick(prices: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    best = float(np.max(values))
    near = values >= best - TIE * max(abs(best), 1e-300)
    return float(np.max(prices[near])), best


def _refine(fn, grid: np.ndarray, vals: np.ndarray, k: int) -> tuple[list, list]:
    """Bounded Brent search around grid index ``k`` (both neighbouring cells)."""
    ps, vs = [], []
    for a, b in ((k - 1, k), (k, k + 1)):
        if a < 0 or b >= len(grid) or not grid[b] > grid[a]:
            continue
        lo, hi = grid[a], grid[b]
        res = optimize.minimize_scalar(lambda x: -fn(x), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12 * max(hi, 1e-300)})
        ps.append(float(res.x))
        vs.append(float(-res.fun))
    return ps, vs


# -- tail integral tables ------------------------------------------------------


def _tail_table(fn, nodes: np.ndarray, scale: float) -> np.ndarray:
    """``int_{nodes[j]}^inf fn`` for all nodes (sorted, finite)."""
    if len(nodes) == 0:
        return nodes
    a, b = nodes[:-1], nodes[1:]
    pan = _panel_sums(fn, a, b) if len(a) else np.array([])
    top = integrate(fn, float(nodes[-1]), INF, scale=max(scale, nodes[-1], 1e-6))
    out = np.empty(len(nodes))
    out[-1] = top
    out[:-1] = top + np.cumsum(pan[::-1])[::-1]
    return out


# -- mechanisms ----------------------------------------------------------------


def boup_revenue(dists: Sequence[PiecewiseDistribution]) -> MechanismReport:
    """Optimal uniform posted price ``max_p p * P(max >= p)``."""
    groups = group_buyers(dists)
    grid = _candidate_prices(groups)
    vals = grid * _s1_left(groups, grid)
    k = int(np.argmax(vals))
    fn = lambda p: float(p * _s1_left(groups, p)[0])  # noqa: E731
    ps, vs = _refine(fn, grid, vals, k)
    prices = np.concatenate([grid, ps, [INF]])
    values = np.concatenate([vals, vs, [_tail_revenue(groups)]])
    p, rev = _pick(prices, values)
    return MechanismReport("boup", rev, p, Method.QUADRATURE)


def spa_reserve_revenue(dists: Sequence[PiecewiseDistribution], r: float) -> MechanismReport:
    """Second price auction with anonymous reserve ``r``."""
    if r < 0:
        raise DomainError("reserve must be nonnegative")
    groups = group_buyers(dists)
    if math.isinf(r):
        return MechanismReport("spa", _tail_revenue(groups), r, Method.QUADRATURE)
    first = r * float(_s1_left(groups, r)[0])
    tail = integrate(lambda v: _s2(groups, v), r, INF, breakpoints=_breakpoints(groups),
                     scale=_scale(groups))
    return MechanismReport("spa", first + tail, r, Method.QUADRATURE)


def bour_revenue(dists: Sequence[PiecewiseDistribution]) -> MechanismReport:
    """Second price auction with the revenue-optimal anonymous reserve."""
    groups = group_buyers(dists)
    grid = _candidate_prices(groups)
    s2 = lambda v: _s2(groups, v)  # noqa: E731
    tails = _tail_table(s2, grid, _scale(groups))
    vals = grid * _s1_left(groups, grid) + tails
    k = int(np.argmax(vals))

    def fn(r):
        j = min(int(np.searchsorted(grid, r, side="left")), len(grid) - 1)
        part = float(_panel_sums(s2, np.array([r]), np.array([grid[j]]))[0]) if grid[j] > r else 0.0
        return float(r * _s1_left(groups, r)[0]) + tails[j] + part

    ps, vs = _refine(fn, grid, vals, k)
    prices = np.concatenate([grid, ps, [INF]])
    values = np.concatenate([vals, vs, [_tail_revenue(groups)]])
    r, rev = _pick(prices, values)
    return MechanismReport("bour", rev, r, Method.QUADRATURE)


def bosp_revenue(dists: Sequence[PiecewiseDistribution], max_n_for_exact: int = 8) -> MechanismReport:
    """Optimal sequential posted pricing by backward induction over buyer orders.

    The state is the multiset of buyers not yet visited, so identical buyers
    share work; i.i.d. instances need only ``n + 1`` states.
    """
    groups = group_buyers(dists)
    n = _n(groups)
    if len(groups) > 1 and n > max_n_for_exact:
        raise CapabilityError(f"exact sequential pricing supports n <= {max_n_for_exact}")
    memo: dict[tuple[int, ...], tuple[float, int, float]] = {}
    zero = tuple(0 for _ in groups)
    memo[zero] = (0.0, -1, INF)

    def value(state):
        if state in memo:
            return memo[state][0]
        best = (-INF, -1, INF)
        for g, (d, _) in enumerate(groups):
            if state[g] == 0:
                continue
            nxt = state[:g] + (state[g] - 1,) + state[g + 1:]
            cont = value(nxt)
            p, gain = best_price(d, cont, 0.0)
            v = cont + gain
            if v > best[0] + TIE * max(abs(v), 1e-300):
                best = (v, g, p)
        memo[state] = best
        return best[0]

    full = tuple(m for _, m in groups)
    # fill bottom-up to keep recursion shallow for large i.i.d. instances
    for total in range(1, n + 1):
        for state in _states_with_total(full, total):
            value(state)
    rev = value(full)
    order, prices = [], []
    pools = [[i for i, d in enumerate(dists) if d == g] for g, _ in groups]
    state = full
    while state != zero:
        _, g, p = memo[state]
        order.append(pools[g][full[g] - state[g]])
        prices.append(p)
        state = state[:g] + (state[g] - 1,) + state[g + 1:]
    return MechanismReport("bosp", rev, {"order": order, "prices": prices}, Method.QUADRATURE)


def _states_with_total(full, total):
    ranges = [range(m + 1) for m in full]
    if len(full) == 1:
        if total <= full[0]:
            yield (total,)
        return
    for st in itertools.product(*ranges):
        if sum(st) == total:
            yield st


def bom_revenue(dists: Sequence[PiecewiseDistribution], mc_samples: int = 0, seed: int = 0,
                grid_size: int = DEFAULT_GRID) -> MechanismReport:
    """Optimal (Myerson) revenue via ironed virtual surplus.

    With ``mc_samples == 0`` the expectation is an exact step sum over the
    piecewise-constant ironed virtual values; otherwise uniform quantiles are
    drawn and the slopes looked up.
    """
    groups = group_buyers(dists)
    curves = [iron(d, grid_size) for d, _ in groups]
    base = float(sum(m * c.r0 for (_, m), c in zip(groups, curves)))
    extra = {"grid_size": grid_size}
    if len(dists) == 1:
        extra["monopoly_revenue"] = monopoly(dists[0]).rev_star
    if mc_samples <= 0:
        rev = base + _max_positive_slope_mean(groups, curves)
        return MechanismReport("bom", rev, None, Method.QUADRATURE, extra=extra)

    mult = [m for _, m in groups]

    def sample(chunk, rows):
        u = _mc.uniforms(seed, 0, chunk, rows, sum(mult))
        best = np.zeros(rows)
        col = 0
        for c, m in zip(curves, mult):
            phi = c.phi(u[:, col:col + m])
            best = np.maximum(best, phi.max(axis=1))
            col += m
        return best

    est = _mc.estimate(sample, mc_samples)
    return MechanismReport("bom", base + est.mean, None, Method.MONTE_CARLO, est.samples,
                           est.std_error, seed, extra)


def _max_positive_slope_mean(groups, curves) -> float:
    """``E[max(0, max_i phibar_i(q_i))]`` as an exact step sum."""
    slopes = np.unique(np.concatenate([c.slopes for c in curves]))
    slopes = slopes[slopes > 0]
    if slopes.size == 0:
        return 0.0
    edges = np.concatenate([[0.0], slopes])
    # on [edges[j], edges[j+1]) the level x is below slopes >= edges[j+1]
    log_none = np.zeros(len(slopes))
    for (_, m), c in zip(groups, curves):
        lens = c.lengths()
        order = np.argsort(c.slopes)
        s_sorted = c.slopes[order]
        l_sorted = lens[order]
        above = np.concatenate([np.cumsum(l_sorted[::-1])[::-1], [0.0]])
        # Q(x) for x in [edges[j], edges[j+1]) = length with slope > x = slope >= edges[j+1]
        idx = np.searchsorted(s_sorted, edges[1:], side="left")
        Q = np.clip(above[idx], 0.0, 1.0)
        with np.errstate(divide="ignore"):
            log_none += m * np.log1p(-Q)
    width = np.diff(edges)
    return float(np.sum(-np.expm1(log_none) * width))


def identity_pricing_revenue(dists: Sequence[PiecewiseDistribution], mc_samples: int = 0,
                             seed: int = 0) -> MechanismReport:
    """Post the maximum of one independent sample profile as a uniform price."""
    groups = group_buyers(dists)
    s1 = lambda v: order_cdf(groups, 1, v)[1]  # noqa: E731
    cont = 0.5 * integrate(lambda v: s1(v) ** 2, 0.0, INF, breakpoints=_breakpoints(groups),
                           scale=_scale(groups))
    atoms = np.unique(np.concatenate([np.array([v for v, p in d.atoms if p > 0])
                                      for d, _ in groups] + [np.array([])]))
    jump = 0.0
    if atoms.size:
        F, _ = order_cdf(groups, 1, atoms)
        Fl, _ = order_cdf(groups, 1, atoms, left=True)
        jump = 0.5 * float(np.sum(atoms * (F - Fl) ** 2))
    exact = cont + jump
    extra = {"lower_bound": cont, "atomless": jump == 0.0}
    if mc_samples <= 0:
        return MechanismReport("ip", exact, None, Method.QUADRATURE, extra=extra)

    def sample(chunk, rows):
        u = _mc.uniforms(seed, 1, chunk, rows, len(dists))
        price = np.zeros(rows)
        for i, d in enumerate(dists):
            price = np.maximum(price, np.asarray(d.sample(u[:, i]), dtype=float))
        return price * _s1_left(groups, price)

    est = _mc.estimate(sample, mc_samples)
    extra["exact"] = exact
    return MechanismReport("ip", est.mean, None, Method.MONTE_CARLO, est.samples,
                           est.std_error, seed, extra)


def spa_duplicate_one(dists: Sequence[PiecewiseDistribution]) -> MechanismReport:
    """Second price auction after adding one copy of the best buyer to duplicate."""
    groups = group_buyers(dists)
    bp = _breakpoints(groups)
    best = (-INF, -1)
    per = []
    for g, (d, m) in enumerate(groups):
        dup = list(groups)
        dup[g] = (d, m + 1)
        try:
            val = integrate(lambda v: order_cdf(dup, 2, v)[1], 0.0, INF, breakpoints=bp,
                            scale=_scale(dup))
        except DivergenceError as exc:
            idx = next(i for i, x in enumerate(dists) if x == d)
            raise DivergenceError(f"duplicating buyer {idx} gives infinite revenue") from exc
        idx = next(i for i, x in enumerate(dists) if x == d)
        per.append((idx, val))
        if val > best[0]:
            best = (val, idx)
    return MechanismReport("spa-dup1", best[0], best[1], Method.QUADRATURE,
                           extra={"per_buyer": {str(i): v for i, v in per}})


# -- constants and reductions ------------------------------------------------


def dilog(y: float) -> float:
    """``Li2(y)`` for ``0 <= y <= 1``: power series, reflected above 1/2."""
    if y < 0 or y > 1:
        raise DomainError("dilogarithm implemented on [0, 1]")
    if y == 1.0:
        return math.pi**2 / 6
    if y <= 0.5:
        return _dilog_series(y)
    z = 1.0 - y
    return math.pi**2 / 6 - math.log(y) * math.log(z) - _dilog_series(z)


def _dilog_series(y: float) -> float:
    total, term_pow, k = 0.0, y, 1
    while True:
        term = term_pow / (k * k)
        total += term
        if term < 1e-14 * max(total, 1e-300) or term == 0.0:
            return total
        k += 1
        term_pow *= y


def bosp_q(x: float) -> float:
    """``Q(x) = ln(x^2/(x^2-1)) - 1/2 sum_k 1/(k^2 x^(2k))`` for ``x > 1``."""
    y = 1.0 / (x * x)
    return -math.log1p(-y) - 0.5 * dilog(y)


def bosp_boup_constant() -> float:
    """``(2 + int_1^inf (1 - exp(-Q(x))) dx)^-1``, integrated in ``t = 1/x``."""
    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        for i, ti in enumerate(t.ravel()):
            if ti <= 0.0:
                out.flat[i] = 0.5
            elif ti >= 1.0:
                out.flat[i] = 1.0
            else:
                out.flat[i] = -math.expm1(-bosp_q(1.0 / ti)) / (ti * ti)
        return out

    val = integrate(f, 0.0, 1.0, breakpoints=(0.5, 0.9, 0.99), rtol=1e-12)
    return 1.0 / (2.0 + val)


def triangular_reduction(dists: Sequence[PiecewiseDistribution],
                         prices: Sequence[float]) -> list[PiecewiseDistribution]:
    """Replace each buyer below ``p_i`` by the triangular tail through ``(p_i, F_i(p_i-))``
    with the remaining mass as an atom at ``p_i``."""
    if len(prices) != len(dists):
        raise DomainError("need one price per buyer")
    out = []
    for d, p in zip(dists, prices):
        F = float(d.cdf_left(p))
        if not 0.0 < F < 1.0:
            raise DomainError(f"degenerate reduction: F({p}) = {F}")
        c = p * (1.0 - F) / F
        out.append(PiecewiseDistribution(((float(p), 1.0 - F),),
                                          (Rational(0.0, float(p), a=c, b=0.0),)))
    return out


MECHANISMS = {
    "bom": bom_revenue,
    "boup": boup_revenue,
    "bour": bour_revenue,
    "bosp": bosp_revenue,
    "ip": identity_pricing_revenue,
    "spa-dup1": spa_duplicate_one,
}
