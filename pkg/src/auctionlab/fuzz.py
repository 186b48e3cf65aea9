"""Random instance generators for property tests and the reproduction harness.

Each generator takes a ``numpy.random.Generator``.  Class membership of the
outputs follows from closure facts: regular and MHR bases, then ``max(X, c)``
(an atom at the floor) and ``min(X, t)`` (an atom at the cap), both of which
keep the quasi-regular and quasi-MHR classes.
"""

from __future__ import annotations

import numpy as np

from . import catalog
from .dist_core import Affine, PiecewiseDistribution, discrete, distribution, truncate


def floor_at(dist: PiecewiseDistribution, c: float) -> PiecewiseDistribution:
    """Distribution of ``max(X, c)``."""
    if c <= dist.support_inf:
        return dist
    atoms = [(c, float(dist.cdf(c)))] + [(v, p) for v, p in dist.atoms if v > c]
    segs = [s if s.lo >= c else s.with_bounds(c, s.hi) for s in dist.segments if s.hi > c]
    return distribution(atoms, segs)


def _u(rng, lo, hi) -> float:
    return float(rng.uniform(lo, hi))


def random_mhr(rng: np.random.Generator) -> PiecewiseDistribution:
    if rng.random() < 0.5:
        return catalog.exponential(_u(rng, 0.3, 3.0), _u(rng, 0.0, 2.0) * (rng.random() < 0.5))
    a = _u(rng, 0.0, 2.0)
    return catalog.uniform(a, a + _u(rng, 0.2, 3.0))


def random_regular(rng: np.random.Generator) -> PiecewiseDistribution:
    k = int(rng.integers(0, 3))
    if k == 0:
        return random_mhr(rng)
    if k == 1:
        return catalog.rational(_u(rng, 0.2, 3.0), _u(rng, 0.0, 2.0))
    return catalog.reg_qmhr_not_mhr()


def _modify(rng, d: PiecewiseDistribution) -> PiecewiseDistribution:
    if rng.random() < 0.4:
        d = floor_at(d, float(d.price(_u(rng, 0.2, 0.9))))
    if rng.random() < 0.3:
        t = float(d.price(_u(rng, 0.01, 0.2)))
        if t > d.support_inf:
            d = truncate(d, t)
    return d


def random_quasi_regular(rng: np.random.Generator) -> PiecewiseDistribution:
    # the n-th root of an equal-revenue CDF is quasi-regular but not regular
    base = catalog.power_of_er(_u(rng, 1.0, 5.0)) if rng.random() < 0.2 else random_regular(rng)
    return _modify(rng, base)


def random_quasi_mhr(rng: np.random.Generator) -> PiecewiseDistribution:
    base = random_mhr(rng) if rng.random() < 0.7 else catalog.reg_qmhr_not_mhr()
    return _modify(rng, base)


def random_discrete(rng: np.random.Generator, max_points: int = 4) -> PiecewiseDistribution:
    k = int(rng.integers(1, max_points + 1))
    vals = rng.choice(np.arange(1, 11), size=k, replace=False).astype(float)
    probs = rng.dirichlet(np.ones(k))
    probs[-1] = 1.0 - probs[:-1].sum()
    return discrete(vals, probs)


def random_piecewise_linear(rng: np.random.Generator, pieces: int = 3) -> PiecewiseDistribution:
    """Piecewise-uniform density on ``[0, L]``; often not regular."""
    edges = np.concatenate([[0.0], np.cumsum(rng.uniform(0.2, 2.0, pieces))])
    w = rng.dirichlet(np.ones(pieces))
    cdf = np.concatenate([[0.0], np.cumsum(w)])
    cdf[-1] = 1.0
    segs = []
    for j in range(pieces):
        slope = (cdf[j + 1] - cdf[j]) / (edges[j + 1] - edges[j])
        segs.append(Affine(float(edges[j]), float(edges[j + 1]),
                           c0=float(cdf[j] - slope * edges[j]), c1=float(slope)))
    return distribution([], segs)


def random_any(rng: np.random.Generator) -> PiecewiseDistribution:
    k = int(rng.integers(0, 6))
    return [random_mhr, random_regular, random_quasi_regular, random_quasi_mhr,
            random_discrete, random_piecewise_linear][k](rng)


def random_tuple(rng: np.random.Generator, gen, n_max: int = 4, iid: bool = False):
    n = int(rng.integers(1, n_max + 1))
    if iid:
        return [gen(rng)] * n
    return [gen(rng) for _ in range(n)]
