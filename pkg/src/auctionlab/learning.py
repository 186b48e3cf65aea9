"""Sample-based learners: empirical uniform reserve and truncated empirical Myerson.

Learners only see a ``SampleMatrix``; the true distributions enter only when
learned mechanisms are evaluated on fresh draws.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import _accel, _mc
from .dist_core import PiecewiseDistribution, point_mass, truncate
from .errors import ContractError, DomainError, ValidationError
from .family import check_quasi_mhr, check_quasi_regular
from .mechanisms import bom_revenue, bour_revenue, spa_reserve_revenue

STREAM_TRAIN, STREAM_FRESH = 20, 21


@dataclass(frozen=True)
class SampleMatrix:
    m: int
    n: int
    values: np.ndarray = field(repr=False)
    seed: int = 0


def draw_samples(dists: Sequence[PiecewiseDistribution], m: int, seed: int,
                 stream: int = STREAM_TRAIN) -> SampleMatrix:
    """``m`` i.i.d. value profiles, produced chunk by chunk from the seed."""
    if m < 1:
        raise DomainError("need at least one sample")
    n = len(dists)

    def one(chunk, rows):
        u = _mc.uniforms(seed, stream, chunk, rows, n)
        return np.column_stack([np.asarray(d.sample(u[:, i]), dtype=float)
                                for i, d in enumerate(dists)])

    vals = np.concatenate(_mc.map_chunks(one, m), axis=0)
    return SampleMatrix(m, n, vals, seed)


def _top_two(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if values.shape[1] == 1:
        return values[:, 0], np.zeros(len(values))
    part = -np.partition(-values, 1, axis=1)
    return part[:, 0], part[:, 1]


def empirical_spa_revenue(samples: SampleMatrix, r) -> np.ndarray:
    """Mean over rows of the second-price-with-reserve revenue at each ``r``."""
    v1, v2 = _top_two(samples.values)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    s1, s2 = np.sort(v1), np.sort(v2)
    suffix2 = np.concatenate([np.cumsum(s2[::-1])[::-1], [0.0]])
    m = len(v1)
    i1 = np.searchsorted(s1, r, side="left")
    i2 = np.searchsorted(s2, r, side="left")
    # rows with v2 >= r pay v2; rows with v1 >= r > v2 pay r
    return (suffix2[i2] + r * ((m - i1) - (m - i2))) / m


def empirical_uniform_reserve(samples: SampleMatrix) -> float:
    """Reserve among observed row maxima with the best empirical SPA revenue.

    Ties go to the larger reserve.
    """
    if samples.m < 1:
        raise DomainError("need at least one sample")
    v1, _ = _top_two(samples.values)
    cand = np.unique(v1)
    rev = empirical_spa_revenue(samples, cand)
    best = rev.max()
    idx = np.flatnonzero(rev >= best - 1e-12 * abs(best))[-1]
    return float(cand[idx])


def empirical_boup(values: np.ndarray) -> float:
    """Best empirical uniform posted-price revenue ``max_p p * #{v1 >= p} / m``."""
    v1 = np.sort(values.max(axis=1))
    m = len(v1)
    return float(np.max(v1 * (m - np.arange(m)) / m))


@dataclass(frozen=True)
class BuyerTable:
    """Ironed virtual value as a nondecreasing step function of the value."""

    atoms: np.ndarray
    phi: np.ndarray

    def lookup(self, v: np.ndarray) -> np.ndarray:
        j = np.searchsorted(self.atoms, v, side="right") - 1
        return np.where(j >= 0, self.phi[np.maximum(j, 0)], -np.inf)


def _empirical_table(col: np.ndarray) -> BuyerTable:
    u, counts = np.unique(col, return_counts=True)
    m = counts.sum()
    s_left = np.cumsum(counts[::-1])[::-1] / m  # P(X >= u_j)
    # kinks of the revenue curve sit at q = P(X >= u_j); add (0, 0)
    q = np.concatenate([[0.0], s_left[::-1]])
    r = np.concatenate([[0.0], (u * s_left)[::-1]])
    keep = _accel.upper_hull(np.ascontiguousarray(q), np.ascontiguousarray(r))
    hq, hr = q[keep], r[keep]
    slopes = np.diff(hr) / np.diff(hq)
    # atom u_j occupies quantiles (P(X > u_j), P(X >= u_j)]
    mid = s_left - 0.5 * counts / m
    k = np.clip(np.searchsorted(hq, mid, side="right") - 1, 0, len(slopes) - 1)
    return BuyerTable(u, slopes[k])


@dataclass(frozen=True)
class EmpiricalMyerson:
    truncation: float
    boup_estimate: float
    tables: tuple[BuyerTable, ...]

    def outcome(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(winner index or -1, payment) per row; ties go to the lower index."""
        v = np.minimum(np.asarray(values, dtype=float), self.truncation)
        N, n = v.shape
        phi = np.column_stack([t.lookup(v[:, i]) for i, t in enumerate(self.tables)])
        best = phi.max(axis=1)
        winner = np.where(best > 0, np.argmax(phi, axis=1), -1)
        pay = np.zeros(N)
        for i, t in enumerate(self.tables):
            rows = np.flatnonzero(winner == i)
            if rows.size == 0:
                continue
            before = phi[rows, :i].max(axis=1, initial=0.0)
            after = phi[rows, i + 1:].max(axis=1, initial=-np.inf)
            # winning needs phi > max(0, earlier) and phi >= later
            strict = before >= after
            level = np.maximum(before, after)
            lo = np.searchsorted(t.phi, level, side="right")
            hi = np.searchsorted(t.phi, level, side="left")
            idx = np.where(strict, lo, hi)
            pay[rows] = t.atoms[np.minimum(idx, len(t.atoms) - 1)]
        return winner, pay


def truncation_level(boup: float, epsilon: float) -> float:
    return 9.0 * math.log(2.0 / epsilon) * boup


def empirical_myerson(samples: SampleMatrix, epsilon: float) -> EmpiricalMyerson:
    """Truncated, ironed empirical Myerson auction.

    The first half of the rows estimates the revenue scale (empirical BOUP,
    which never exceeds the optimum); the second half builds the tables.
    """
    if samples.m < 10:
        raise DomainError("empirical Myerson needs at least 10 samples")
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    half = samples.m // 2
    held, train = samples.values[:half], samples.values[half:]
    boup = empirical_boup(held)
    t = truncation_level(boup, epsilon)
    tables = tuple(_empirical_table(np.minimum(train[:, i], t)) for i in range(samples.n))
    return EmpiricalMyerson(t, boup, tables)


def evaluate_myerson(mech: EmpiricalMyerson, dists: Sequence[PiecewiseDistribution],
                     mc_samples: int, seed: int) -> _mc.Estimate:
    """Expected revenue on fresh draws."""
    n = len(dists)

    def one(chunk, rows):
        u = _mc.uniforms(seed, STREAM_FRESH, chunk, rows, n)
        v = np.column_stack([np.asarray(d.sample(u[:, i]), dtype=float)
                             for i, d in enumerate(dists)])
        return mech.outcome(v)[1]

    return _mc.estimate(one, mc_samples)


# -- truncation --------------------------------------------------------------


class Flavor(str, enum.Enum):
    QUASI_MHR = "quasi_mhr"
    QUASI_REGULAR_SINGLE = "quasi_regular_single"


@dataclass(frozen=True)
class TruncationCheck:
    bom_full: float
    bom_truncated: float
    truncation: float
    bound: float
    passes: bool

    def to_json(self) -> dict:
        return {"bom_full": self.bom_full, "bom_truncated": self.bom_truncated,
                "truncation": self.truncation, "bound": self.bound, "passes": self.passes}


def _truncate_all(dists, t):
    return [truncate(d, t) if t > d.support_inf else point_mass(t) for d in dists]


def truncation_loss_check(dists: Sequence[PiecewiseDistribution], epsilon: float,
                          flavor: Flavor | str = Flavor.QUASI_MHR,
                          verify: bool = True) -> TruncationCheck:
    """Compare the optimal revenue before and after collapsing the tail at ``t``.

    ``quasi_mhr``: ``t = 9 ln(2/eps) BOM`` and the bound is ``(1 - eps) BOM``.
    ``quasi_regular_single``: one buyer, ``t = BOM / eps``, bound ``(1 - eps/(1-eps)) BOM``.
    """
    flavor = Flavor(flavor)
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    if flavor is Flavor.QUASI_REGULAR_SINGLE:
        if len(dists) != 1:
            raise ContractError("the quasi-regular truncation bound is only established for n = 1")
        if verify and not check_quasi_regular(dists[0], 1024).verdict:
            raise ContractError("buyer is not quasi-regular")
    elif verify:
        for d in dict.fromkeys(dists):
            if not check_quasi_mhr(d, 1024).verdict:
                raise ContractError("buyer is not quasi-MHR")
    full = bom_revenue(dists).revenue
    if flavor is Flavor.QUASI_MHR:
        t, factor = truncation_level(full, epsilon), 1.0 - epsilon
    else:
        t, factor = full / epsilon, 1.0 - epsilon / (1.0 - epsilon)
    trunc = bom_revenue(_truncate_all(dists, t)).revenue
    bound = factor * full
    # both sides are exact step sums over the ironed curves: allow rounding only
    return TruncationCheck(full, trunc, t, bound, trunc >= bound - 1e-9 * max(1.0, full))


# -- experiment --------------------------------------------------------------


def trial_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint64)[0] >> 1)


@dataclass(frozen=True)
class ConvergenceTable:
    rows: list[dict]
    spearman_eur: float
    spearman_ema: float | None
    bour: float
    bom: float

    def to_json(self) -> dict:
        return {"rows": self.rows, "spearman_eur": self.spearman_eur,
                "spearman_ema": self.spearman_ema, "bour": self.bour, "bom": self.bom}


def _spearman(x, y) -> float:
    if len(x) < 2:
        return 1.0
    if np.ptp(y) == 0:
        return 0.0
    return float(stats.spearmanr(x, y).statistic)


def convergence_experiment(dists: Sequence[PiecewiseDistribution], m_grid: Sequence[int],
                           epsilon: float = 0.1, trials: int = 20, seed: int = 0,
                           myerson: bool = False, eval_samples: int = 20000) -> ConvergenceTable:
    """Mean fresh-sample revenue ratios of the learners as ``m`` grows.

    EUR revenue is computed exactly from the learned reserve; the empirical
    Myerson auction (optional) is evaluated by Monte Carlo on fresh draws.
    """
    if trials < 1 or not m_grid:
        raise ValidationError("need at least one trial and one sample size")
    bour = bour_revenue(dists).revenue
    bom = bom_revenue(dists).revenue
    rows = []
    for m in m_grid:
        eur, ema = [], []
        for k in range(trials):
            s = draw_samples(dists, int(m), trial_seed(seed, int(m), k))
            r = empirical_uniform_reserve(s)
            eur.append(spa_reserve_revenue(dists, r).revenue / bour)
            if myerson and m >= 10:
                mech = empirical_myerson(s, epsilon)
                est = evaluate_myerson(mech, dists, eval_samples, trial_seed(seed, int(m), k, 1))
                ema.append(est.mean / bom)
        row = {"m": int(m), "eur_ratio": float(np.mean(eur)),
               "eur_std": float(np.std(eur, ddof=1)) if trials > 1 else 0.0}
        if ema:
            row["ema_ratio"] = float(np.mean(ema))
        rows.append(row)
    ms = [r["m"] for r in rows]
    rho_eur = _spearman(ms, [r["eur_ratio"] for r in rows])
    rho_ema = None
    if myerson and all("ema_ratio" in r for r in rows):
        rho_ema = _spearman(ms, [r["ema_ratio"] for r in rows])
    return ConvergenceTable(rows, rho_eur, rho_ema, bour, bom)
