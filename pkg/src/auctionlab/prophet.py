"""Stationary cost prophet inequality.

A sequence of ``n`` i.i.d. costs arrives online; the algorithm must accept
exactly one.  The optimal stopping rule accepts ``c_k`` iff it does not exceed
the continuation value ``V_{k+1}``, with ``V_n = E[c]`` and
``V_k = E[min(c, V_{k+1})]``.  The prophet pays ``E[min_k c_k]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._quad import integrate
from .dist_core import INF, PiecewiseDistribution, expected_min
from .errors import DomainError
from .family import check_quasi_mhr


@dataclass(frozen=True)
class ProphetRun:
    n: int
    dist: PiecewiseDistribution = field(repr=False)
    alg_cost: float
    prophet_cost: float
    ratio: float
    thresholds: tuple[float, ...] = field(repr=False)

    def to_json(self) -> dict:
        return {"n": self.n, "alg_cost": self.alg_cost, "prophet_cost": self.prophet_cost,
                "ratio": self.ratio,
                "thresholds": ["inf" if math.isinf(t) else t for t in self.thresholds]}


def optimal_stopping_values(dist: PiecewiseDistribution, n: int) -> list[float]:
    """``[V_1, ..., V_n]``; raises DivergenceError when the mean is infinite."""
    if n < 1:
        raise DomainError("need at least one round")
    if dist.support_inf < 0:
        raise DomainError("costs must be nonnegative")
    v = [0.0] * n
    v[-1] = dist.mean
    for k in range(n - 2, -1, -1):
        v[k] = expected_min(dist, v[k + 1])
    return v


def expected_minimum(dist: PiecewiseDistribution, n: int) -> float:
    """``E[min of n draws] = integral_0^inf P(X > v)^n dv``."""
    lo = max(dist.support_inf, 0.0)
    pts = dist.characteristic_points()
    # a scale near the typical minimum keeps the tail map well resolved; measure it
    # from the mass above lo so an atom at lo cannot collapse the scale to zero
    s0 = float(dist.sf(lo))
    if s0 <= 0.0:
        return lo
    mid = float(dist.price(s0 * 0.5 ** (1.0 / n)))
    scale = max(mid - lo, 1e-12 * max(1.0, lo)) if math.isfinite(mid) else 1.0
    tail = integrate(lambda x: np.asarray(dist.sf(x), dtype=float) ** n, lo, INF,
                     breakpoints=[p for p in pts if math.isfinite(p)] + [mid] * math.isfinite(mid),
                     scale=scale, rtol=1e-12)
    return lo + tail


def competitive_ratio(dist: PiecewiseDistribution, n: int, check: bool = True) -> ProphetRun:
    """Optimal online cost over the prophet's expected minimum."""
    if check and not check_quasi_mhr(dist, 1024).verdict:
        warnings.warn("cost distribution is not quasi-MHR; the factor 2 guarantee does not apply",
                      RuntimeWarning, stacklevel=2)
    v = optimal_stopping_values(dist, n)
    prophet = expected_minimum(dist, n)
    ratio = v[0] / prophet if prophet > 0 else (1.0 if v[0] == 0 else math.inf)
    thresholds = tuple(v[1:]) + (INF,)
    return ProphetRun(n, dist, v[0], prophet, ratio, thresholds)
