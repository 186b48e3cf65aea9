"""Independent reference implementations used by the test suite.

Nothing here imports the library's numerics.  Discrete mechanisms are
enumerated over every value profile in exact rational arithmetic; the optimal
mechanism is cross-checked against a linear program over all Bayesian
incentive compatible mechanisms; VCG is brute force over feasible sets.
Continuous constants are frozen values computed once with mpmath.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

# -- frozen derived constants ----------------------------------------------------

# (2 + int_1^inf 1 - exp(-Q(x)) dx)^-1, mpmath quad at 30 digits
BOSP_BOUP_C = 0.38165585797408
# Exp(1) cost prophet ratio n V_1 at n = 1000, mpmath recursion at 30 digits
EXP_PROPHET_1000 = 1.9938155625658678
# monopoly revenue of 1 - e^{-v/e} on [1, inf): price 1 sells surely, price e sells w.p. 1/e
BMR_SMALL_REV = 1.0


def mp_bosp_constant(dps: int = 30) -> float:
    import mpmath as mp
    mp.mp.dps = dps

    def q(x):
        return mp.log(x**2 / (x**2 - 1)) - mp.polylog(2, 1 / x**2) / 2

    val = mp.quad(lambda x: 1 - mp.exp(-q(x)), [1, 1.5, 3, 10, mp.inf])
    return float(1 / (2 + val))


def mp_exp_prophet(n: int, dps: int = 30) -> float:
    """Optimal stopping cost over E[min] = 1/n for Exp(1) costs."""
    import mpmath as mp
    mp.mp.dps = dps
    v = mp.mpf(1)
    for _ in range(n - 1):
        v = 1 - mp.exp(-v)
    return float(v * n)


# -- discrete instances ----------------------------------------------------------


class Disc:
    """Finite distribution with exact rational masses."""

    def __init__(self, values, weights):
        tot = sum(weights)
        pairs = sorted((int(v), Fraction(w, tot)) for v, w in zip(values, weights) if w > 0)
        self.values = [v for v, _ in pairs]
        self.probs = [p for _, p in pairs]

    def sf_left(self, p) -> Fraction:
        return sum((q for v, q in zip(self.values, self.probs) if v >= p), Fraction(0))

    def floats(self):
        return np.array(self.values, float), np.array([float(p) for p in self.probs])


def random_disc(rng: np.random.Generator, max_points: int = 4) -> Disc:
    k = int(rng.integers(1, max_points + 1))
    vals = rng.choice(np.arange(1, 11), size=k, replace=False)
    w = rng.integers(1, 10, size=k)
    return Disc(vals.tolist(), w.tolist())


def profiles(dists):
    for combo in itertools.product(*[list(zip(d.values, d.probs)) for d in dists]):
        vals = [v for v, _ in combo]
        pr = Fraction(1)
        for _, p in combo:
            pr *= p
        yield vals, pr


def _support(dists):
    return sorted({v for d in dists for v in d.values})


def boup(dists) -> Fraction:
    best = Fraction(0)
    for p in _support(dists):
        sale = sum((pr for vals, pr in profiles(dists) if max(vals) >= p), Fraction(0))
        best = max(best, p * sale)
    return best


def spa(dists, r) -> Fraction:
    tot = Fraction(0)
    for vals, pr in profiles(dists):
        s = sorted(vals, reverse=True)
        if s[0] >= r:
            second = s[1] if len(s) > 1 else 0
            tot += pr * max(r, second)
    return tot


def bour(dists) -> Fraction:
    return max(spa(dists, r) for r in [0] + _support(dists))


def bosp(dists) -> Fraction:
    best = Fraction(0)
    for order in itertools.permutations(range(len(dists))):
        v = Fraction(0)
        for i in reversed(order):
            d = dists[i]
            opts = [v] + [p * d.sf_left(p) + (1 - d.sf_left(p)) * v for p in d.values]
            v = max(opts)
        best = max(best, v)
    return best


def identity_pricing(dists) -> Fraction:
    mx: dict[int, Fraction] = {}
    for vals, pr in profiles(dists):
        mx[max(vals)] = mx.get(max(vals), Fraction(0)) + pr
    return sum((q * p * sum((w for u, w in mx.items() if u >= p), Fraction(0))
                for p, q in mx.items()), Fraction(0))


def spa_duplicate_one(dists) -> Fraction:
    best = Fraction(0)
    for i in range(len(dists)):
        ext = list(dists) + [dists[i]]
        tot = sum((pr * sorted(vals, reverse=True)[1] for vals, pr in profiles(ext)), Fraction(0))
        best = max(best, tot)
    return best


def ironed_virtual_values(d: Disc) -> list[Fraction]:
    """Ironed virtual value of each support point, from the concave hull of
    ``(P(v >= v_j), v_j P(v >= v_j))`` together with the origin."""
    qs = [d.sf_left(v) for v in d.values]
    pts = [(Fraction(0), Fraction(0))] + [(q, v * q) for v, q in zip(reversed(d.values),
                                                                       reversed(qs))]
    hull: list[tuple[Fraction, Fraction]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) <= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    out = []
    for v, q in zip(d.values, qs):
        # the value v_j occupies quantiles (q_{j+1}, q_j]; slope of the hull there
        for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
            if x1 < q <= x2:
                out.append((y2 - y1) / (x2 - x1))
                break
    return out


def bom(dists) -> Fraction:
    phis = [dict(zip(d.values, ironed_virtual_values(d))) for d in dists]
    return sum((pr * max([Fraction(0)] + [phis[i][v] for i, v in enumerate(vals)])
                for vals, pr in profiles(dists)), Fraction(0))


def bom_lp(dists) -> float:
    """Optimal revenue over all BIC and interim IR single-item mechanisms."""
    n = len(dists)
    profs = list(profiles(dists))
    nx = n * len(profs)
    types = [(i, j) for i in range(n) for j in range(len(dists[i].values))]
    pidx = {t: nx + k for k, t in enumerate(types)}
    nv = nx + len(types)

    def x(i, k):
        return i * len(profs) + k

    # interim allocation X_i(v_ij) as a row over x variables
    interim = {}
    for i, d in enumerate(dists):
        for j, v in enumerate(d.values):
            row = np.zeros(nv)
            for k, (vals, pr) in enumerate(profs):
                if vals[i] == v:
                    row[x(i, k)] = float(pr / d.probs[j])
            interim[(i, j)] = row
    a_ub, b_ub = [], []
    for k in range(len(profs)):
        row = np.zeros(nv)
        for i in range(n):
            row[x(i, k)] = 1.0
        a_ub.append(row)
        b_ub.append(1.0)
    for i, d in enumerate(dists):
        for j, v in enumerate(d.values):
            ir = -v * interim[(i, j)]
            ir[pidx[(i, j)]] += 1.0
            a_ub.append(ir)
            b_ub.append(0.0)
            for j2 in range(len(d.values)):
                if j2 == j:
                    continue
                row = -v * interim[(i, j)] + v * interim[(i, j2)]
                row[pidx[(i, j)]] += 1.0
                row[pidx[(i, j2)]] -= 1.0
                a_ub.append(row)
                b_ub.append(0.0)
    c = np.zeros(nv)
    for (i, j), col in pidx.items():
        c[col] = -float(dists[i].probs[j])
    bounds = [(0, 1)] * nx + [(None, None)] * len(types)
    res = linprog(c, A_ub=np.array(a_ub), b_ub=np.array(b_ub), bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return -res.fun


# -- VCG brute force ----------------------------------------------------------------


def vcg(feasible, values):
    """Welfare-maximising feasible set (lexicographically smallest on ties)
    and externality payments."""
    sets = sorted({tuple(sorted(s)) for s in feasible} | {()})

    def opt(vals):
        best, arg = -math.inf, ()
        for s in sets:
            w = sum(vals[i] for i in s)
            if w > best:
                best, arg = w, s
        return best, arg

    total, win = opt(values)
    pay = {}
    for i in win:
        without = list(values)
        without[i] = 0.0
        pay[i] = opt(without)[0] - (total - values[i])
    return win, pay


def downward_closed(feasible) -> bool:
    fam = {frozenset(s) for s in feasible}
    return all(frozenset(t) in fam for s in fam for r in range(len(s))
               for t in itertools.combinations(s, r))


# -- order statistics -----------------------------------------------------------------


def order_cdf(cdfs, k: int) -> float:
    """``P(k-th largest <= v)`` from per-buyer ``F_i(v)`` by summing over which
    buyers exceed ``v`` (fewer than ``k`` of them)."""
    n = len(cdfs)
    tot = 0.0
    for r in range(min(k, n + 1)):
        for above in itertools.combinations(range(n), r):
            p = 1.0
            for i in range(n):
                p *= (1.0 - cdfs[i]) if i in above else cdfs[i]
            tot += p
    return tot
