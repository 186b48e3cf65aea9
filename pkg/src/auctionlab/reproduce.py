"""Canonical instances and their expected constants.

Every function returns a list of ``Row`` objects; the CLI prints them and the
acceptance tests assert on them.  Randomised suites take an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import catalog, fuzz
from . import downward_closed as dc
from .dist_core import point_mass
from .family import Family, check_quasi_regular, check_regular, memberships
from .mechanisms import (
    bom_revenue, boup_revenue, bosp_boup_constant, bour_revenue, identity_pricing_revenue,
    spa_duplicate_one,
)
from .order_stats import closure_check, order_statistic
from .prophet import competitive_ratio

E = math.e


@dataclass(frozen=True)
class Row:
    name: str
    value: Any
    target: Any
    tol: float | None
    kind: str  # "approx" | "min" | "max" | "equal"
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"name": self.name, "value": self.value, "target": self.target,
               "kind": self.kind, "passed": self.passed}
        if self.tol is not None:
            out["tol"] = self.tol
        if self.extra:
            out["extra"] = self.extra
        return out


def approx(name, value, target, tol, **extra) -> Row:
    return Row(name, float(value), float(target), tol, "approx",
               bool(abs(value - target) <= tol), extra)


def at_least(name, value, bound, **extra) -> Row:
    return Row(name, float(value), float(bound), None, "min", bool(value >= bound), extra)


def at_most(name, value, bound, **extra) -> Row:
    return Row(name, float(value), float(bound), None, "max", bool(value <= bound), extra)


def equal(name, value, target, **extra) -> Row:
    return Row(name, value, target, None, "equal", value == target, extra)


# -- single-item ratios ----------------------------------------------------------


def ratios() -> list[Row]:
    rows = [approx("bosp_boup_constant", bosp_boup_constant(), 0.3817, 1e-4)]

    d = catalog.bour_iid(2000, 0.8725)
    bom = bom_revenue(d).revenue
    rows.append(approx("bour_over_bom.iid_n2000", bour_revenue(d).revenue / bom, 0.6822, 0.01))
    rows.append(approx("spa_dup1_over_bom.iid_n2000", spa_duplicate_one(d).revenue / bom,
                       0.6822, 0.01))

    d = catalog.boup_iid(1000)
    bom, boup, bour = (bom_revenue(d).revenue, boup_revenue(d).revenue, bour_revenue(d).revenue)
    rows.append(approx("boup_over_bour.iid_n1000", boup / bour, 6 / math.pi**2, 0.01))
    rows.append(approx("boup_over_bom.iid_n1000", boup / bom, 0.5, 0.01))

    d = catalog.spa_dup_asymmetric(1.75088)
    rows.append(approx("spa_dup1_over_bom.asymmetric",
                       spa_duplicate_one(d).revenue / bom_revenue(d).revenue, 0.6365, 1e-3))

    d = catalog.ip_asymmetric(1.0, 1e-3)
    rows.append(approx("ip_over_bom.asymmetric",
                       identity_pricing_revenue(d).revenue / bom_revenue(d).revenue, 0.375, 0.005))

    d = catalog.ip_iid(2000, 0.6016, 1e-3)
    rows.append(approx("ip_over_bom.iid_n2000",
                       identity_pricing_revenue(d).revenue / bom_revenue(d).revenue, 0.3978, 0.005))
    return rows


# -- families --------------------------------------------------------------------


def hierarchy(seed: int = 0, random_count: int = 500, grid_size: int = 4096) -> list[Row]:
    rows = []
    for name, d, expected in catalog.hierarchy_witnesses():
        got = memberships(d, grid_size)
        rows.append(equal(f"witness.{name}", list(got), list(expected)))
    rng = np.random.default_rng(seed)
    broken = 0
    for _ in range(random_count):
        reg, mhr, qr, qmhr = memberships(fuzz.random_any(rng), grid_size)
        # MHR => regular and quasi-MHR; regular => quasi-regular; quasi-MHR => quasi-regular
        if (mhr and not (reg and qmhr)) or (reg and not qr) or (qmhr and not qr):
            broken += 1
    rows.append(equal("implication_chain.violations", broken, 0, instances=random_count))
    return rows


def closure(seed: int = 0, count: int = 100, grid_size: int = 4096) -> list[Row]:
    rng = np.random.default_rng(seed)
    suites = [
        ("quasi_regular", fuzz.random_quasi_regular, Family.QUASI_REGULAR, False),
        ("quasi_mhr", fuzz.random_quasi_mhr, Family.QUASI_MHR, False),
        ("regular_iid", fuzz.random_regular, Family.REGULAR, True),
        ("mhr_iid", fuzz.random_mhr, Family.MHR, True),
    ]
    rows = []
    for name, gen, fam, iid in suites:
        misses, checks = 0, 0
        for _ in range(count):
            dists = fuzz.random_tuple(rng, gen, 4, iid=iid)
            for k in range(1, len(dists) + 1):
                checks += 1
                if not closure_check(dists, k, fam, grid_size).verdict:
                    misses += 1
        rows.append(equal(f"closure.{name}.false_negatives", misses, 0, checks=checks))
    # the maximum of an equal-revenue buyer and a constant buyer is not regular
    gd = order_statistic([catalog.equal_revenue(), point_mass(2.0)], 1, grid_size=grid_size)
    rows.append(equal("asymmetric_max.regular", check_regular(gd, grid_size).verdict, False))
    rows.append(equal("asymmetric_max.quasi_regular",
                      check_quasi_regular(gd, grid_size).verdict, True))
    return rows


# -- downward-closed -------------------------------------------------------------


def _paired(a: np.ndarray, b: np.ndarray, c: float) -> tuple[float, float]:
    diff = a - c * b
    return float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(len(diff)))


def downward_inequalities(seed: int, count: int = 100, n_max: int = 8,
                          mc_samples: int = 20000) -> list[Row]:
    """Worst normalised slack of each revenue guarantee over random instances."""
    rng = np.random.default_rng(seed)
    worst = {"eager": math.inf, "lazy": math.inf, "adaptive": math.inf, "dup": math.inf}
    coef = {"eager": 1 / (E + 1), "lazy": 1 / (E + 1), "adaptive": 1 / 3, "dup": 1 / 3}
    for j in range(count):
        n = int(rng.integers(1, n_max + 1))
        env = dc.random_explicit_env(n, rng)
        dists = [fuzz.random_quasi_mhr(rng) for _ in range(n)]
        cols = dc.dc_profile_samples(env, dists, mc_samples, seed + j)
        for key in worst:
            mean, se = _paired(cols[key], cols["welfare"], coef[key])
            # slack in units of the standard error; >= -3 passes
            z = mean / se if se > 0 else (math.inf if mean >= -1e-12 else -math.inf)
            worst[key] = min(worst[key], z)
    return [at_least(f"downward.{k}.min_z", worst[k], -3.0, coefficient=coef[k], instances=count)
            for k in worst]


def bmr_ratios(ms=(512, 2048, 8192), mc_samples: int = 2000, seed: int = 0,
               mode: str = "lazy") -> list[tuple[int, float, float]]:
    out = []
    for m in ms:
        env, dists = dc.bmr_environment(m)
        rev = dc.monopoly_reserves_revenue(env, dists, mode, mc_samples, seed)
        bom = dc.bom_downward_closed(env, dists, mc_samples, seed)
        out.append((m, rev.revenue / bom.revenue, rev.std_error / bom.revenue))
    return out


def downward(seed: int = 0, ms=(512, 2048, 8192), mc_samples: int = 2000,
             random_count: int = 100, random_mc: int = 20000) -> list[Row]:
    rows = []
    for mode in ("eager", "lazy"):
        table = bmr_ratios(ms, mc_samples, seed, mode)
        vals = [r for _, r, _ in table]
        dec = all(b < a for a, b in zip(vals, vals[1:]))
        rows.append(equal(f"bmr.{mode}.decreasing", dec, True,
                          ratios={str(m): r for m, r, _ in table}))
        rows.append(approx(f"bmr.{mode}.ratio_m{ms[-1]}", vals[-1], 1 / (E + 1), 0.06))
    if random_count:
        rows += downward_inequalities(seed, random_count, 8, random_mc)
    return rows


# -- prophet -----------------------------------------------------------------------


def prophet(ns=(10, 100, 1000)) -> list[Row]:
    exp = catalog.exponential(1.0)
    ratios_ = [competitive_ratio(exp, n).ratio for n in ns]
    rows = [Row("prophet.exponential.n1000", ratios_[-1], [1.85, 2.0], None, "range",
                1.85 <= ratios_[-1] <= 2.0),
            equal("prophet.exponential.nondecreasing",
                  all(b >= a for a, b in zip(ratios_, ratios_[1:])), True)]
    for name, d, expected in catalog.hierarchy_witnesses():
        if not expected[3]:
            continue
        worst = max(competitive_ratio(d, n).ratio for n in ns)
        rows.append(at_most(f"prophet.{name}.max_ratio", worst, 2.0 + 1e-6))
    return rows


TARGETS = {"ratios", "hierarchy", "closure", "downward", "prophet"}

__all__ = ["Row", "ratios", "hierarchy", "closure", "downward", "downward_inequalities",
           "bmr_ratios", "prophet", "TARGETS"]
