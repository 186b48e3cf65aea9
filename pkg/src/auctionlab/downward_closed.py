"""VCG-based mechanisms in downward-closed environments.

Two environment shapes are supported:

* ``ExplicitEnv``: an explicit list of feasible buyer sets (n <= 22), stored as
  bitmasks in lexicographic order so the first welfare maximiser is the
  lexicographically smallest set;
* ``CapacityWithRival``: ``m`` small buyers of which at most ``cap`` may win,
  against one big buyer (index ``m``) with a known value who is served alone.

All Monte Carlo runs draw every chunk from a counter-based generator, so the
output depends only on the seed.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _accel, _mc
from .dist_core import PiecewiseDistribution, best_price, iron, monopoly, point_mass
from .errors import CapabilityError, ValidationError
from .mechanisms import MechanismReport, Method

MAX_EXPLICIT = 22
STREAM_VALUES, STREAM_DUP, STREAM_QUANT = 10, 11, 12


class Mode(str, enum.Enum):
    EAGER = "eager"
    LAZY = "lazy"
    ADAPTIVE = "adaptive"


# -- environments ------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitEnv:
    n: int
    masks: np.ndarray  # int64 bitmasks, lexicographic order

    @classmethod
    def from_sets(cls, sets: Sequence[Sequence[int]], n: int | None = None) -> "ExplicitEnv":
        fs = {frozenset(int(i) for i in s) for s in sets}
        fs.add(frozenset())
        top = max((max(s) for s in fs if s), default=-1)
        n = top + 1 if n is None else int(n)
        if any(i < 0 or i >= n for s in fs for i in s):
            raise ValidationError("feasible set index out of range")
        if n > MAX_EXPLICIT:
            raise CapabilityError(f"explicit environments support n <= {MAX_EXPLICIT}")
        for s in fs:
            for i in s:
                if s - {i} not in fs:
                    raise ValidationError("feasible sets are not downward-closed")
        ordered = sorted(fs, key=lambda s: tuple(sorted(s)))
        masks = np.array([sum(1 << i for i in s) for s in ordered], dtype=np.int64)
        return cls(n, masks)

    def sets(self) -> list[tuple[int, ...]]:
        return [tuple(i for i in range(self.n) if (m >> i) & 1) for m in self.masks.tolist()]

    def servable(self) -> np.ndarray:
        """Buyers that belong to at least one feasible set."""
        any_mask = int(np.bitwise_or.reduce(self.masks)) if len(self.masks) else 0
        return np.array([(any_mask >> i) & 1 for i in range(self.n)], dtype=bool)

    def to_json(self) -> dict:
        return {"type": "explicit", "n": self.n, "feasible": [list(s) for s in self.sets()]}


@dataclass(frozen=True)
class CapacityWithRival:
    small: int
    cap: int
    big_value: float

    @property
    def n(self) -> int:
        return self.small + 1

    def to_json(self) -> dict:
        return {"type": "capacity_with_rival", "small": self.small, "cap": self.cap,
                "big_value": self.big_value}


Environment = ExplicitEnv | CapacityWithRival


def environment_from_json(obj: dict) -> Environment:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValidationError("environment needs a 'type' field")
    kind = obj["type"]
    try:
        if kind == "explicit":
            return ExplicitEnv.from_sets(obj["feasible"], obj.get("n"))
        if kind == "capacity_with_rival":
            env = CapacityWithRival(int(obj["small"]), int(obj["cap"]), float(obj["big_value"]))
            if env.small < 0 or env.cap < 0 or env.big_value < 0:
                raise ValidationError("capacity environment fields must be nonnegative")
            return env
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (ValidationError, CapabilityError)):
            raise
        raise ValidationError(f"malformed environment: {exc}") from exc
    raise ValidationError(f"unknown environment type {kind!r}")


def single_item(n: int) -> ExplicitEnv:
    return ExplicitEnv.from_sets([[i] for i in range(n)], n)


def bmr_environment(m: int) -> tuple[CapacityWithRival, list[PiecewiseDistribution]]:
    """Capacity instance whose monopoly-reserve revenue approaches 1/(e+1) of optimal."""
    from .catalog import bmr_small
    eps = math.sqrt(math.log(m) / m)
    e = math.e
    cap = math.ceil((math.exp(-1 / e) + eps) * m)
    big = ((e + 1) * math.exp(-1 / e) - eps) * m
    return CapacityWithRival(m, cap, big), [bmr_small()] * m


def bmr_plus_environment(m: int) -> tuple[CapacityWithRival, list[PiecewiseDistribution]]:
    """Smalls against a big buyer of value ``(3 - eps) m``; any number of smalls may win."""
    from .catalog import bmr_plus_small
    eps = math.sqrt(math.log(m) / m)
    return CapacityWithRival(m, m, (3 - eps) * m), [bmr_plus_small()] * m


def _check_buyers(env: Environment, dists: Sequence[PiecewiseDistribution]):
    if isinstance(env, CapacityWithRival):
        if len(dists) == env.small + 1:
            last = dists[-1]
            if not (len(last.atoms) == 1 and not last.segments and last.atoms[0][0] == env.big_value):
                raise ValidationError("last buyer must be a point mass at the big value")
            dists = dists[:-1]
        if len(dists) != env.small:
            raise ValidationError(f"expected {env.small} small buyers, got {len(dists)}")
        return list(dists)
    if len(dists) != env.n:
        raise ValidationError(f"environment has {env.n} buyers but {len(dists)} distributions")
    return list(dists)


# -- VCG ---------------------------------------------------------------------


def _top_k(values: np.ndarray, k: int):
    """Rows' top-k membership (ties to lower indices), top-k sums and (k+1)-th values."""
    N, m = values.shape
    k = min(k, m)
    if k == 0:
        return np.zeros((N, m), dtype=bool), np.zeros(N), values.max(axis=1, initial=0.0)
    if k == m:
        return np.ones((N, m), dtype=bool), values.sum(axis=1), np.zeros(N)
    part = -np.partition(-values, (k - 1, k), axis=1)
    tau, nxt = part[:, k - 1], part[:, k]
    above = values > tau[:, None]
    need = k - above.sum(axis=1)
    ties = values == tau[:, None]
    win = above | (ties & (np.cumsum(ties, axis=1) <= need[:, None]))
    s_k = np.where(above, values, 0.0).sum(axis=1) + need * tau
    return win, s_k, nxt


def _capacity_vcg(env: CapacityWithRival, values: np.ndarray):
    """Vectorised VCG for the capacity pattern.

    Returns (small_win mask (N, m), big_win (N,), payments (N, m + 1), welfare (N,)).
    """
    N, m = values.shape
    big = env.big_value
    win, s_k, nxt = _top_k(values, env.cap)
    smalls_win = s_k >= big
    win &= smalls_win[:, None]
    pay = np.zeros((N, m + 1))
    others = s_k[:, None] - values
    ps = np.maximum(nxt[:, None], big - others)
    ps = np.minimum(np.maximum(ps, 0.0), values)
    pay[:, :m] = np.where(win, ps, 0.0)
    pay[:, m] = np.where(smalls_win, 0.0, s_k)
    welfare = np.where(smalls_win, s_k, big)
    return win, ~smalls_win, pay, welfare


def vcg(env: Environment, values: Sequence[float]):
    """Welfare-maximising winners and externality payments for one profile."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValidationError("values must be finite")
    if isinstance(env, CapacityWithRival):
        if len(v) == env.small + 1:
            v = v[:-1]
        win, bigwin, pay, _ = _capacity_vcg(env, v[None, :])
        winners = [int(i) for i in np.nonzero(win[0])[0]]
        if bigwin[0]:
            winners = [env.small]
        return winners, {i: float(pay[0, i]) for i in winners}
    win_idx, pay = _accel.explicit_vcg(np.ascontiguousarray(v[None, :]), env.masks)
    mask = int(env.masks[win_idx[0]])
    winners = [i for i in range(env.n) if (mask >> i) & 1]
    return winners, {i: float(pay[0, i]) for i in winners}


def _explicit_batch(env: ExplicitEnv, values: np.ndarray):
    win_idx, pay = _accel.explicit_vcg(np.ascontiguousarray(values), env.masks)
    member = ((env.masks[:, None] >> np.arange(env.n)[None, :]) & 1).astype(bool)
    win = member[win_idx]
    welfare = np.zeros(len(values))
    for i in range(env.n):
        welfare = welfare + np.where(win[:, i], values[:, i], 0.0)
    return win, pay, welfare


# -- sampling -------------------------------------------------------------------


def _chunk_rows(n: int) -> int:
    return max(16, min(_mc.CHUNK, (1 << 21) // max(n, 1)))


def _draw(dists, seed, stream, chunk, rows):
    u = _mc.uniforms(seed, stream, chunk, rows, len(dists))
    out = np.empty_like(u)
    groups: dict[PiecewiseDistribution, list[int]] = {}
    for i, d in enumerate(dists):
        groups.setdefault(d, []).append(i)
    for d, cols in groups.items():
        out[:, cols] = np.asarray(d.sample(u[:, cols]), dtype=float)
    return out


@dataclass(frozen=True)
class _Prices:
    """Adaptive monopoly price ``argmax_{p >= t} p P(X >= p)`` by table lookup."""

    grid: np.ndarray
    best_p: np.ndarray
    best_v: np.ndarray
    dist: PiecewiseDistribution

    @classmethod
    def build(cls, d: PiecewiseDistribution, size: int = 2048) -> "_Prices":
        from .dist_core import quantile_grid
        q = quantile_grid(d, size)
        pts = [np.asarray(d.price(q[q > 0]), dtype=float), d.characteristic_points()]
        extra = [best_price(d, 0.0, x, prefer="low")[0] for x in d.characteristic_points()]
        pts.append(np.array([x for x in extra if math.isfinite(x)]))
        grid = np.unique(np.concatenate(pts))
        grid = grid[np.isfinite(grid)]
        rev = grid * np.asarray(d.sf_left(grid), dtype=float)
        best_p = np.empty_like(grid)
        best_v = np.empty_like(grid)
        cur_p, cur_v = math.inf, d.revenue_at_zero
        for j in range(len(grid) - 1, -1, -1):
            if rev[j] >= cur_v - 1e-12 * max(abs(cur_v), 1e-300):
                cur_p, cur_v = grid[j], max(rev[j], cur_v)
            best_p[j], best_v[j] = cur_p, cur_v
        return cls(grid, best_p, best_v, d)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        j = np.searchsorted(self.grid, t, side="left")
        inside = j < len(self.grid)
        jj = np.minimum(j, len(self.grid) - 1)
        cand_p = np.where(inside, self.best_p[jj], math.inf)
        cand_v = np.where(inside, self.best_v[jj], self.dist.revenue_at_zero)
        own = t * np.asarray(self.dist.sf_left(t), dtype=float)
        use_t = own >= cand_v - 1e-12 * np.maximum(np.abs(cand_v), 1e-300)
        return np.where(use_t, t, cand_p)


def _reserves(dists):
    cache = {d: monopoly(d, prefer="low").r_star for d in dict.fromkeys(dists)}
    return np.array([cache[d] for d in dists])


def dc_profile_samples(env: Environment, dists: Sequence[PiecewiseDistribution],
                       mc_samples: int, seed: int, modes=("vcg", "eager", "lazy", "adaptive",
                                                          "dup")) -> dict[str, np.ndarray]:
    """Per-profile revenue and welfare of each mechanism on common random numbers.

    Keys: ``welfare`` (VCG welfare), ``vcg`` (VCG revenue), ``eager``, ``lazy``,
    ``adaptive``, ``dup`` (n-duplicate VCG revenue), ``eager_welfare``.
    """
    dists = _check_buyers(env, dists)
    cap = isinstance(env, CapacityWithRival)
    n_all = len(dists) + (1 if cap else 0)
    r_star = _reserves(dists)
    if cap:
        r_big = env.big_value
    uniq = {d: None for d in dists}
    adaptive = {d: _Prices.build(d) for d in uniq} if "adaptive" in modes else {}
    rows_per = _chunk_rows(n_all)

    def one(chunk, rows):
        v = _draw(dists, seed, STREAM_VALUES, chunk, rows)
        out = {}
        win, pay, welfare = _run_vcg(env, v)
        out["welfare"] = welfare
        out["vcg"] = pay.sum(axis=1)
        vv = _with_big(env, v)
        rs = np.concatenate([r_star, [r_big]]) if cap else r_star
        if "eager" in modes:
            keep = vv >= rs[None, :]
            ve = np.where(keep[:, :len(dists)], v, 0.0)
            w2, p2, wel2 = _run_vcg(env, ve, big_allowed=(not cap) or env.big_value >= r_big)
            ok = w2 & keep
            out["eager"] = np.where(ok, np.maximum(p2, rs[None, :]), 0.0).sum(axis=1)
            out["eager_welfare"] = np.where(ok, vv, 0.0).sum(axis=1)
        if "lazy" in modes:
            ok = win & (vv >= rs[None, :])
            out["lazy"] = np.where(ok, np.maximum(pay, rs[None, :]), 0.0).sum(axis=1)
        if "adaptive" in modes:
            total = np.zeros(rows)
            for i, d in enumerate(dists):
                w = win[:, i]
                if not w.any():
                    continue
                p = adaptive[d](pay[w, i])
                total[w] += np.where(v[w, i] >= p, p, 0.0)
            if cap:
                # the big buyer is a point mass: its adaptive price is its value
                total += np.where(win[:, -1], env.big_value, 0.0)
            out["adaptive"] = total
        if "dup" in modes:
            v2 = _draw(dists, seed, STREAM_DUP, chunk, rows)
            out["dup"] = _dup_vcg_revenue(env, v, v2)
        return out

    parts = _mc.map_chunks(one, mc_samples, rows_per)
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def _with_big(env, v):
    if isinstance(env, CapacityWithRival):
        return np.concatenate([v, np.full((len(v), 1), env.big_value)], axis=1)
    return v


def _run_vcg(env, v, big_allowed: bool = True):
    """(winner mask over all buyers, payments, welfare) for a batch of profiles."""
    if isinstance(env, CapacityWithRival):
        e = env if big_allowed else CapacityWithRival(env.small, env.cap, 0.0)
        win, bigwin, pay, welfare = _capacity_vcg(e, v)
        if not big_allowed:
            bigwin = np.zeros_like(bigwin)
            pay[:, -1] = 0.0
        return np.concatenate([win, bigwin[:, None]], axis=1), pay, welfare
    return _explicit_batch(env, v)


def _dup_vcg_revenue(env, v, v2):
    """VCG revenue when every buyer has an independent duplicate and at most one
    member of each pair may win."""
    hi = np.maximum(v, v2)
    lo = np.minimum(v, v2)
    if isinstance(env, CapacityWithRival):
        big = env.big_value
        win, s_k, nxt = _top_k(hi, env.cap)
        smalls_win = s_k >= big
        win &= smalls_win[:, None]
        p = np.maximum(np.maximum(lo, nxt[:, None]), big - (s_k[:, None] - hi))
        p = np.minimum(np.maximum(p, 0.0), hi)
        rev = np.where(win, p, 0.0).sum(axis=1)
        # the big buyer's duplicate has the same value, so the winner pays it
        return rev + np.where(smalls_win, 0.0, big)
    win, _, welfare = _explicit_batch(env, hi)
    member = ((env.masks[:, None] >> np.arange(env.n)[None, :]) & 1).astype(bool)
    N = len(hi)
    W = np.zeros((N, len(env.masks)))
    for i in range(env.n):
        W = W + np.where(member[:, i][None, :], hi[:, i:i + 1], 0.0)
    rev = np.zeros(N)
    for i in range(env.n):
        w = win[:, i]
        if not w.any():
            continue
        alt = W[w] - np.where(member[:, i][None, :], (hi[w, i] - lo[w, i])[:, None], 0.0)
        p = alt.max(axis=1) - (welfare[w] - hi[w, i])
        rev[w] += np.minimum(np.maximum(p, 0.0), hi[w, i])
    return rev


def _estimate(x: np.ndarray) -> _mc.Estimate:
    return _mc.combine([_mc._moments(x)])


def monopoly_reserves_revenue(env: Environment, dists: Sequence[PiecewiseDistribution],
                              mode: Mode | str, mc_samples: int, seed: int) -> MechanismReport:
    mode = Mode(mode)
    cols = dc_profile_samples(env, dists, mc_samples, seed, modes=("vcg", mode.value))
    est = _estimate(cols[mode.value])
    wel = _estimate(cols["welfare"])
    return MechanismReport(f"bmr-{mode.value}", est.mean, None, Method.MONTE_CARLO,
                           est.samples, est.std_error, seed,
                           {"vcg_welfare": wel.mean, "vcg_welfare_std_error": wel.std_error})


def n_duplicate_vcg(env: Environment, dists: Sequence[PiecewiseDistribution],
                    mc_samples: int, seed: int) -> MechanismReport:
    cols = dc_profile_samples(env, dists, mc_samples, seed, modes=("vcg", "dup"))
    est = _estimate(cols["dup"])
    wel = _estimate(cols["welfare"])
    return MechanismReport("dup-vcg", est.mean, None, Method.MONTE_CARLO, est.samples,
                           est.std_error, seed,
                           {"vcg_welfare": wel.mean, "vcg_welfare_std_error": wel.std_error})


def bom_downward_closed(env: Environment, dists: Sequence[PiecewiseDistribution],
                        mc_samples: int, seed: int, grid_size: int = 4096) -> MechanismReport:
    """``sum_i Rbar_i(0) + E[max_S sum_{i in S} max(0, phibar_i(q_i))]``."""
    dists = _check_buyers(env, dists)
    curves = {d: iron(d, grid_size) for d in dists}
    if isinstance(env, CapacityWithRival):
        base = sum(curves[d].r0 for d in dists)
    else:
        serv = env.servable()
        base = sum(curves[d].r0 for d, s in zip(dists, serv) if s)
    rows_per = _chunk_rows(len(dists) + 1)
    groups: dict[PiecewiseDistribution, list[int]] = {}
    for i, d in enumerate(dists):
        groups.setdefault(d, []).append(i)

    def one(chunk, rows):
        u = _mc.uniforms(seed, STREAM_QUANT, chunk, rows, len(dists))
        phi = np.empty_like(u)
        val = np.empty_like(u)
        for d, cols in groups.items():
            phi[:, cols] = curves[d].phi(u[:, cols])
            val[:, cols] = np.asarray(d.price(u[:, cols]), dtype=float)
        phi = np.maximum(phi, 0.0)
        if isinstance(env, CapacityWithRival):
            win, s_k, _ = _top_k(phi, env.cap)
            smalls = s_k >= env.big_value
            win &= smalls[:, None] & (phi > 0)
            surplus = np.maximum(s_k, env.big_value)
            welfare = np.where(win, val, 0.0).sum(axis=1) + np.where(smalls, 0.0, env.big_value)
        else:
            win, _, surplus = _explicit_batch(env, phi)
            welfare = np.where(win & (phi > 0), val, 0.0).sum(axis=1)
        return np.column_stack([surplus, welfare])

    est, wel = _mc.estimate_many(one, mc_samples, rows_per)
    return MechanismReport("bom-dc", base + est.mean, None, Method.MONTE_CARLO, est.samples,
                           est.std_error, seed, {"grid_size": grid_size, "welfare": wel.mean,
                                                 "welfare_std_error": wel.std_error})


def random_explicit_env(n: int, rng: np.random.Generator, n_max_sets: int = 6) -> ExplicitEnv:
    """Downward closure of a few random subsets."""
    gens = []
    for _ in range(int(rng.integers(1, n_max_sets + 1))):
        size = int(rng.integers(1, n + 1))
        gens.append(rng.choice(n, size=size, replace=False).tolist())
    closed = set()
    for g in gens:
        for r in range(len(g) + 1):
            for sub in itertools.combinations(sorted(g), r):
                closed.add(sub)
    return ExplicitEnv.from_sets([list(s) for s in closed], n)


__all__ = [
    "Mode", "ExplicitEnv", "CapacityWithRival", "environment_from_json", "single_item",
    "bmr_environment", "bmr_plus_environment", "vcg", "monopoly_reserves_revenue",
    "n_duplicate_vcg", "bom_downward_closed", "dc_profile_samples", "random_explicit_env",
    "point_mass",
]
