"""One-dimensional value distributions with atoms and analytic segments.

A :class:`PiecewiseDistribution` is a finite list of point masses plus a finite
list of continuous segments.  Each segment carries a closed-form CDF family
(rational, exponential, power-of-equal-revenue, uniform, affine).  The CDF of
the whole distribution is assembled from *increments*: a segment on
``[lo, hi]`` contributes ``G(min(v, hi)) - G(lo)`` where ``G`` is the family
formula, and every atom contributes its mass.  Survival functions are summed
from the top, so both tails keep full relative precision.

Quantile convention: ``q`` is a sale probability.  ``price(q)`` is the largest
price that sells with probability at least ``q``, i.e.
``sup{v : P(X >= v) >= q}``, and ``R(q) = q * price(q)``.  ``R(0)`` is the
limit ``lim v * P(X >= v)`` as ``v`` grows, which is positive for rational and
power-of-equal-revenue tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Iterable, Sequence

import numpy as np
from scipy import optimize

from . import _accel
from ._quad import integrate
from .errors import DivergenceError, DomainError, UndefinedPointError, ValidationError

MASS_TOL = 1e-9
INF = math.inf


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _out(x: np.ndarray, like):
    return float(x) if np.ndim(like) == 0 else x


# ---------------------------------------------------------------------------
# segment families


@dataclass(frozen=True)
class Segment:
    """Continuous piece on ``[lo, hi]``; formulas below are absolute CDFs."""

    lo: float
    hi: float
    kind: ClassVar[str] = ""

    def cdf(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sf(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pdf(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def isf(self, s: np.ndarray) -> np.ndarray:
        """Value whose family survival equals ``s``."""
        raise NotImplementedError

    def icdf(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def int_sf(self, a: float, b: float) -> float:
        """``integral_a^b sf(x) dx`` for ``lo <= a <= b <= hi``."""
        if b <= a:
            return 0.0
        if math.isinf(b):
            return INF
        return integrate(lambda x: self.sf(x), a, b)

    def tail_revenue(self) -> float:
        """``lim v*sf(v)`` as ``v -> inf``."""
        return 0.0

    def params(self) -> dict[str, float]:
        raise NotImplementedError

    def with_bounds(self, lo: float, hi: float) -> "Segment":
        kw = dict(self.params())
        return type(self)(lo, hi, **kw)


@dataclass(frozen=True)
class Rational(Segment):
    """``F(v) = (v - b) / (v - b + a)``; a line ``a + (b - a) q`` in revenue space."""

    a: float = 1.0
    b: float = 0.0
    kind: ClassVar[str] = "rational"

    def cdf(self, v):
        v = _arr(v)
        return (v - self.b) / (v - self.b + self.a)

    def sf(self, v):
        v = _arr(v)
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(v), 0.0, self.a / (v - self.b + self.a))

    def pdf(self, v):
        d = _arr(v) - self.b + self.a
        return self.a / (d * d)

    def isf(self, s):
        s = _arr(s)
        with np.errstate(divide="ignore"):
            return self.b - self.a + self.a / s

    def icdf(self, u):
        u = _arr(u)
        with np.errstate(divide="ignore"):
            return self.b + self.a * u / (1.0 - u)

    def int_sf(self, a, b):
        if b <= a:
            return 0.0
        if math.isinf(b):
            return INF if self.a > 0 else 0.0
        return self.a * math.log((b - self.b + self.a) / (a - self.b + self.a))

    def tail_revenue(self):
        return self.a

    def params(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class Exponential(Segment):
    """``F(v) = 1 - exp(-lam (v - shift))``."""

    lam: float = 1.0
    shift: float = 0.0
    kind: ClassVar[str] = "exponential"

    def cdf(self, v):
        return -np.expm1(-self.lam * (_arr(v) - self.shift))

    def sf(self, v):
        return np.exp(-self.lam * (_arr(v) - self.shift))

    def pdf(self, v):
        return self.lam * self.sf(v)

    def isf(self, s):
        with np.errstate(divide="ignore"):
            return self.shift - np.log(_arr(s)) / self.lam

    def icdf(self, u):
        with np.errstate(divide="ignore"):
            return self.shift - np.log1p(-_arr(u)) / self.lam

    def int_sf(self, a, b):
        if b <= a:
            return 0.0
        return float(self.sf(a) - self.sf(b)) / self.lam

    def params(self):
        return {"lam": self.lam, "shift": self.shift}


@dataclass(frozen=True)
class PowerOfER(Segment):
    """``F(v) = ((v - 1) / v) ** (1 / n)``; its n-th power is the equal-revenue CDF."""

    n: float = 1.0
    kind: ClassVar[str] = "power_of_er"

    def _log_cdf(self, v):
        v = _arr(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log1p(-1.0 / v) / self.n

    def cdf(self, v):
        return np.exp(self._log_cdf(v))

    def sf(self, v):
        return -np.expm1(self._log_cdf(v))

    def pdf(self, v):
        v = _arr(v)
        return self.cdf(v) / (self.n * v * (v - 1.0))

    def isf(self, s):
        s = _arr(s)
        with np.errstate(divide="ignore"):
            return 1.0 / -np.expm1(self.n * np.log1p(-s))

    def icdf(self, u):
        u = _arr(u)
        with np.errstate(divide="ignore"):
            return 1.0 / -np.expm1(self.n * np.log(u))

    def tail_revenue(self):
        return 1.0 / self.n

    def params(self):
        return {"n": self.n}


@dataclass(frozen=True)
class Uniform(Segment):
    """Linear CDF ``(v - a) / (b - a)``."""

    a: float = 0.0
    b: float = 1.0
    kind: ClassVar[str] = "uniform"

    def cdf(self, v):
        return (_arr(v) - self.a) / (self.b - self.a)

    def sf(self, v):
        return (self.b - _arr(v)) / (self.b - self.a)

    def pdf(self, v):
        return np.full_like(_arr(v), 1.0 / (self.b - self.a))

    def isf(self, s):
        return self.b - _arr(s) * (self.b - self.a)

    def icdf(self, u):
        return self.a + _arr(u) * (self.b - self.a)

    def int_sf(self, a, b):
        if b <= a:
            return 0.0
        w = self.b - self.a
        return ((self.b - a) ** 2 - (self.b - b) ** 2) / (2.0 * w)

    def params(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class Affine(Segment):
    """Generic linear CDF piece ``c0 + c1 v``."""

    c0: float = 0.0
    c1: float = 1.0
    kind: ClassVar[str] = "affine"

    def cdf(self, v):
        return self.c0 + self.c1 * _arr(v)

    def sf(self, v):
        return (1.0 - self.c0) - self.c1 * _arr(v)

    def pdf(self, v):
        return np.full_like(_arr(v), self.c1)

    def isf(self, s):
        return (1.0 - self.c0 - _arr(s)) / self.c1

    def icdf(self, u):
        return (_arr(u) - self.c0) / self.c1

    def int_sf(self, a, b):
        if b <= a:
            return 0.0
        return (1.0 - self.c0) * (b - a) - 0.5 * self.c1 * (b * b - a * a)

    def params(self):
        return {"c0": self.c0, "c1": self.c1}


SEGMENT_KINDS: dict[str, type[Segment]] = {
    cls.kind: cls for cls in (Rational, Exponential, PowerOfER, Uniform, Affine)
}

_PARAM_ALIASES = {"lambda": "lam", "rate": "lam"}


# ---------------------------------------------------------------------------
# distribution


@dataclass(frozen=True)
class RevenueCurvePoint:
    q: float
    price: float
    revenue: float


@dataclass(frozen=True)
class MonopolyPoint:
    q_star: float
    r_star: float
    rev_star: float


@dataclass(frozen=True, eq=False)
class PiecewiseDistribution:
    atoms: tuple[tuple[float, float], ...] = ()
    segments: tuple[Segment, ...] = ()
    _c: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple(sorted((float(v), float(p)) for v, p in self.atoms))
        segs = tuple(sorted(self.segments, key=lambda s: (s.lo, s.hi)))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "segments", segs)
        self._validate()
        self._prepare()

    # -- construction helpers ------------------------------------------------

    @property
    def key(self) -> tuple:
        """Hashable identity used to group i.i.d. buyers."""
        return (self.atoms, tuple((type(s).__name__, s.lo, s.hi,
                                   tuple(sorted(s.params().items())))
                                  for s in self.segments))

    def __eq__(self, other):
        return isinstance(other, PiecewiseDistribution) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def _validate(self):
        if not self.atoms and not self.segments:
            raise ValidationError("distribution has neither atoms nor segments")
        for v, p in self.atoms:
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"atom location {v} must be finite and nonnegative")
            if not (p >= 0 and math.isfinite(p)):
                raise ValidationError(f"atom mass {p} must be a nonnegative probability")
        prev_hi = -INF
        for s in self.segments:
            if not (math.isfinite(s.lo) and s.lo >= 0 and s.hi > s.lo):
                raise ValidationError(f"segment bounds [{s.lo}, {s.hi}] are invalid")
            if s.lo < prev_hi:
                raise ValidationError("segments overlap")
            prev_hi = s.hi
            lo_c = float(s.cdf(s.lo))
            hi_c = 1.0 if math.isinf(s.hi) else float(s.cdf(s.hi))
            if not (-1e-12 <= lo_c <= hi_c <= 1 + 1e-12) or not math.isfinite(lo_c):
                raise ValidationError(
                    f"{s.kind} segment on [{s.lo}, {s.hi}] is not a CDF piece")
            for v, _ in self.atoms:
                if s.lo < v < s.hi:
                    raise ValidationError(f"atom at {v} lies inside segment [{s.lo}, {s.hi}]")
        total = sum(p for _, p in self.atoms) + sum(self._seg_mass(s) for s in self.segments)
        if abs(total - 1.0) > MASS_TOL:
            raise ValidationError(f"total mass {total!r} differs from 1")

    @staticmethod
    def _seg_mass(s: Segment) -> float:
        hi_sf = 0.0 if math.isinf(s.hi) else float(s.sf(s.hi))
        return float(s.sf(s.lo)) - hi_sf

    def _prepare(self):
        c = self._c
        ax = np.array([v for v, p in self.atoms if p > 0], dtype=float)
        ap = np.array([p for v, p in self.atoms if p > 0], dtype=float)
        c["ax"], c["ap"] = ax, ap
        c["a_prefix"] = np.concatenate([[0.0], np.cumsum(ap)])
        c["a_suffix"] = np.concatenate([np.cumsum(ap[::-1])[::-1], [0.0]])
        segs = [s for s in self.segments if self._seg_mass(s) > 0]
        c["segs"] = segs
        c["seg_mass"] = [self._seg_mass(s) for s in segs]
        c["seg_sf_hi"] = [0.0 if math.isinf(s.hi) else float(s.sf(s.hi)) for s in segs]
        c["seg_cdf_lo"] = [float(s.cdf(s.lo)) for s in segs]
        # pieces in ascending order: atoms before a segment starting at the same point
        pieces = [(v, 0, i) for i, v in enumerate(ax)]
        pieces += [(s.lo, 1, j) for j, s in enumerate(segs)]
        pieces.sort()
        kinds = np.array([k for _, k, _ in pieces], dtype=int)
        idx = np.array([i for _, _, i in pieces], dtype=int)
        tops, bottoms, vals = [], [], []
        for _, k, i in pieces:
            if k == 0:
                x = ax[i]
                tops.append(float(self.sf_left(x)))
                bottoms.append(float(self.sf(x)))
                vals.append(x)
            else:
                s = segs[i]
                above = self._above(i)
                tops.append(above + c["seg_mass"][i])
                bottoms.append(above)
                vals.append(s.lo)
        c["p_kind"], c["p_idx"] = kinds, idx
        c["p_top"] = np.minimum.accumulate(np.array(tops, dtype=float))
        c["p_bottom"] = np.array(bottoms, dtype=float)
        c["p_val"] = np.array(vals, dtype=float)

    def _above(self, j: int) -> float:
        """``P(X >= hi)`` for segment ``j`` (everything at or beyond its top end)."""
        s = self._c["segs"][j]
        if math.isinf(s.hi):
            return 0.0
        return float(self.sf_left(s.hi))

    # -- support -------------------------------------------------------------

    @property
    def support_inf(self) -> float:
        lows = [s.lo for s in self._c["segs"]] + list(self._c["ax"])
        return float(min(lows))

    @property
    def support_sup(self) -> float:
        highs = [s.hi for s in self._c["segs"]] + list(self._c["ax"])
        return float(max(highs))

    @property
    def is_discrete(self) -> bool:
        return not self._c["segs"]

    def characteristic_points(self) -> np.ndarray:
        pts = list(self._c["ax"])
        for s in self._c["segs"]:
            pts.append(s.lo)
            if math.isfinite(s.hi):
                pts.append(s.hi)
        return np.unique(np.array(pts, dtype=float))

    def atom_mass(self, v: float) -> float:
        ax, ap = self._c["ax"], self._c["ap"]
        i = np.searchsorted(ax, v)
        return float(ap[i]) if i < len(ax) and ax[i] == v else 0.0

    # -- distribution functions ----------------------------------------------

    def _seg_upper(self, v: np.ndarray) -> np.ndarray:
        """Continuous mass strictly above ``v``."""
        out = np.zeros_like(v)
        c = self._c
        for s, m, shi in zip(c["segs"], c["seg_mass"], c["seg_sf_hi"]):
            inside = (v > s.lo) & (v < s.hi)
            out += np.where(v <= s.lo, m, 0.0)
            if inside.any():
                out[inside] += s.sf(v[inside]) - shi
        return out

    def _seg_lower(self, v: np.ndarray) -> np.ndarray:
        """Continuous mass at or below ``v``."""
        out = np.zeros_like(v)
        c = self._c
        for s, m, clo in zip(c["segs"], c["seg_mass"], c["seg_cdf_lo"]):
            inside = (v > s.lo) & (v < s.hi)
            out += np.where(v >= s.hi, m, 0.0)
            if inside.any():
                out[inside] += s.cdf(v[inside]) - clo
        return out

    def sf(self, v):
        """``P(X > v)``."""
        x = _arr(v).copy()
        c = self._c
        k = np.searchsorted(c["ax"], x, side="right")
        return _out(np.clip(c["a_suffix"][k] + self._seg_upper(np.atleast_1d(x)).reshape(x.shape), 0, 1), v)

    def sf_left(self, v):
        """``P(X >= v)``: the probability of sale at price ``v``."""
        x = _arr(v).copy()
        c = self._c
        k = np.searchsorted(c["ax"], x, side="left")
        return _out(np.clip(c["a_suffix"][k] + self._seg_upper(np.atleast_1d(x)).reshape(x.shape), 0, 1), v)

    def cdf(self, v):
        """``P(X <= v)`` (right-continuous)."""
        x = _arr(v).copy()
        c = self._c
        k = np.searchsorted(c["ax"], x, side="right")
        return _out(np.clip(c["a_prefix"][k] + self._seg_lower(np.atleast_1d(x)).reshape(x.shape), 0, 1), v)

    def cdf_left(self, v):
        """``P(X < v)``."""
        x = _arr(v).copy()
        c = self._c
        k = np.searchsorted(c["ax"], x, side="left")
        return _out(np.clip(c["a_prefix"][k] + self._seg_lower(np.atleast_1d(x)).reshape(x.shape), 0, 1), v)

    def pdf(self, v):
        x = np.atleast_1d(_arr(v))
        out = np.zeros_like(x)
        for s in self._c["segs"]:
            inside = (x >= s.lo) & (x < s.hi)
            if inside.any():
                out[inside] = s.pdf(x[inside])
        return _out(out.reshape(np.shape(v)), v)

    # -- quantile space ------------------------------------------------------

    def _solve_price(self, q: np.ndarray, strict: bool) -> np.ndarray:
        c = self._c
        tops = c["p_top"]
        rev = tops[::-1]
        side = "right" if strict else "left"
        count = len(tops) - np.searchsorted(rev, q, side=side)
        idx = np.clip(count - 1, 0, len(tops) - 1)
        kinds = c["p_kind"][idx]
        out = c["p_val"][idx].copy()
        seg_pos = np.nonzero(kinds == 1)[0]
        if seg_pos.size:
            sidx = c["p_idx"][idx[seg_pos]]
            for j in np.unique(sidx):
                s = c["segs"][j]
                sel = seg_pos[sidx == j]
                above = c["p_bottom"][idx[sel]]
                target = q[sel] - above + c["seg_sf_hi"][j]
                with np.errstate(divide="ignore", invalid="ignore"):
                    v = s.isf(np.maximum(target, 0.0))
                out[sel] = np.clip(np.nan_to_num(v, nan=s.hi, posinf=s.hi), s.lo, s.hi)
        return out

    def price(self, q):
        """``sup{v : P(X >= v) >= q}``; ``price(0)`` is the support supremum."""
        qa = _arr(q)
        if np.any((qa < 0) | (qa > 1)) or np.any(np.isnan(qa)):
            raise DomainError("quantile must lie in [0, 1]")
        res = self._solve_price(np.atleast_1d(qa).ravel(), strict=False).reshape(qa.shape)
        return _out(res, q)

    def price_right(self, q):
        """Right limit of :meth:`price` (``sup{v : P(X >= v) > q}``)."""
        qa = _arr(q)
        if np.any((qa < 0) | (qa > 1)):
            raise DomainError("quantile must lie in [0, 1]")
        res = self._solve_price(np.atleast_1d(qa).ravel(), strict=True).reshape(qa.shape)
        return _out(res, q)

    @property
    def revenue_at_zero(self) -> float:
        segs = self._c["segs"]
        top = segs[-1] if segs else None
        if top is not None and math.isinf(top.hi):
            return float(top.tail_revenue())
        return 0.0

    def revenue(self, q):
        """``R(q) = q * price(q)`` with the limit value at ``q = 0``."""
        qa = _arr(q)
        p = _arr(self.price(qa))
        with np.errstate(invalid="ignore"):
            r = np.where(qa > 0, qa * p, self.revenue_at_zero)
        return _out(r, q)

    def sample(self, u):
        """Generalised inverse ``inf{v : F(v) >= u}`` (inverse-transform sampling)."""
        ua = np.atleast_1d(_arr(u)).ravel()
        if np.any((ua < 0) | (ua > 1)):
            raise DomainError("uniform variate must lie in [0, 1]")
        c = self._c
        kinds, idx, vals = c["p_kind"], c["p_idx"], c["p_val"]
        ends = []
        below = 0.0
        for k, i in zip(kinds, idx):
            below += c["ap"][i] if k == 0 else c["seg_mass"][i]
            ends.append(below)
        ends = np.minimum(np.maximum.accumulate(np.array(ends)), 1.0)
        ends[-1] = 1.0
        pos = np.clip(np.searchsorted(ends, ua, side="left"), 0, len(ends) - 1)
        out = vals[pos].copy()
        starts = np.concatenate([[0.0], ends[:-1]])
        for j in np.unique(pos[kinds[pos] == 1]):
            s = c["segs"][idx[j]]
            sel = (pos == j)
            target = ua[sel] - starts[j] + c["seg_cdf_lo"][idx[j]]
            with np.errstate(divide="ignore", invalid="ignore"):
                v = s.icdf(np.clip(target, 0.0, 1.0))
            out[sel] = np.clip(np.nan_to_num(v, nan=s.lo, posinf=s.hi), s.lo, s.hi)
        return _out(out.reshape(np.shape(u)), u)

    # -- integrals -----------------------------------------------------------

    def integral_sf(self, a: float, b: float = INF) -> float:
        """``integral_a^b P(X > x) dx``; raises when the value is infinite."""
        if b <= a:
            return 0.0
        c = self._c
        ax, ap = c["ax"], c["ap"]
        total = float(np.sum(ap * np.clip(ax - a, 0.0, b - a)))
        for s, m, shi in zip(c["segs"], c["seg_mass"], c["seg_sf_hi"]):
            total += m * (min(max(s.lo, a), b) - a)
            lo, hi = max(a, s.lo), min(b, s.hi)
            if hi > lo:
                part = s.int_sf(lo, hi)
                if math.isinf(part):
                    raise DivergenceError(f"tail integral of {s.kind} segment diverges")
                if shi:
                    part -= shi * (hi - lo)
                total += part
        return total

    @property
    def mean(self) -> float:
        return self.integral_sf(0.0, INF)

    # -- serialisation -------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        return {
            "atoms": [{"v": v, "p": p} for v, p in self.atoms],
            "segments": [
                {"lo": s.lo, "hi": "inf" if math.isinf(s.hi) else s.hi,
                 "kind": s.kind, "params": s.params()}
                for s in self.segments
            ],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "PiecewiseDistribution":
        if not isinstance(obj, dict):
            raise ValidationError("distribution must be a JSON object")
        try:
            atoms = [(float(a["v"]), float(a["p"])) for a in obj.get("atoms", [])]
            segs = [_segment_from_json(s) for s in obj.get("segments", [])]
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed distribution: {exc}") from exc
        return cls(tuple(atoms), tuple(segs))


def _segment_from_json(obj: dict[str, Any]) -> Segment:
    kind = obj["kind"]
    if kind not in SEGMENT_KINDS:
        raise ValidationError(f"unknown segment kind {kind!r}")
    lo = float(obj["lo"])
    hi_raw = obj.get("hi", "inf")
    hi = INF if hi_raw in ("inf", "Infinity", None) else float(hi_raw)
    params = {_PARAM_ALIASES.get(k, k): float(v) for k, v in (obj.get("params") or {}).items()}
    cls = SEGMENT_KINDS[kind]
    if cls is Uniform:
        params = {"a": params.get("a", params.get("lo", lo)),
                  "b": params.get("b", params.get("hi", hi))}
        if math.isinf(params["b"]):
            raise ValidationError("uniform segment needs a finite upper end")
    try:
        return cls(lo, hi, **params)
    except TypeError as exc:
        raise ValidationError(f"bad params for {kind}: {exc}") from exc


def distribution(atoms: Iterable[tuple[float, float]] = (),
                 segments: Iterable[Segment] = ()) -> PiecewiseDistribution:
    return PiecewiseDistribution(tuple(atoms), tuple(segments))


# ---------------------------------------------------------------------------
# revenue curve, ironing, monopoly


@dataclass(frozen=True)
class IronedCurve:
    """Concave envelope of a sampled revenue curve.

    ``breakpoints`` holds ``(q_j, Rbar(q_j))`` with ``q_0 = 0`` and
    ``q_last = 1``; ``slopes[j]`` is the ironed virtual value on
    ``(q_j, q_{j+1})``.
    """

    q: np.ndarray
    r: np.ndarray
    slopes: np.ndarray

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.q.tolist(), self.r.tolist()))

    @property
    def r0(self) -> float:
        return float(self.r[0])

    def value(self, q):
        return np.interp(q, self.q, self.r)

    def phi(self, q):
        """Ironed virtual value at sale probability ``q``."""
        j = np.clip(np.searchsorted(self.q, q, side="left") - 1, 0, len(self.slopes) - 1)
        return self.slopes[j]

    def lengths(self) -> np.ndarray:
        return np.diff(self.q)

    @property
    def max_value(self) -> float:
        return float(np.max(self.r))


def quantile_grid(dist: PiecewiseDistribution, grid_size: int = 4096) -> np.ndarray:
    """Sale-probability grid: log-spaced near 0 and 1, uniform body, and all kinks."""
    g = max(int(grid_size), 2)
    parts = [
        np.array([0.0, 1.0]),
        np.geomspace(1e-12, 1.0, g // 2),
        np.linspace(0.0, 1.0, max(g - g // 2, 2)),
        1.0 - np.geomspace(1e-12, 0.5, max(g // 4, 2)),
        dist._c["p_top"], dist._c["p_bottom"],
    ]
    q = np.unique(np.clip(np.concatenate(parts), 0.0, 1.0))
    return q


def revenue_curve(dist: PiecewiseDistribution, q: float) -> RevenueCurvePoint:
    q = float(q)
    p = float(dist.price(q))
    return RevenueCurvePoint(q, p, float(dist.revenue(q)))


def iron(dist: PiecewiseDistribution, grid_size: int = 4096) -> IronedCurve:
    cache = dist._c.setdefault("iron", {})
    if grid_size in cache:
        return cache[grid_size]
    q = quantile_grid(dist, grid_size)
    r = _arr(dist.revenue(q))
    curve = hull_curve(q, r)
    cache[grid_size] = curve
    return curve


def hull_curve(q: np.ndarray, r: np.ndarray) -> IronedCurve:
    """Upper concave envelope of points sorted by ``q`` (duplicates allowed)."""
    keep = _accel.upper_hull(np.ascontiguousarray(q, dtype=float),
                             np.ascontiguousarray(r, dtype=float))
    hq, hr = list(q[keep]), list(r[keep])
    # vertices a few ulps apart pass the cross-product test yet give rising
    # slopes once divided out; drop the middle vertex until slopes are monotone
    k = 1
    while k < len(hq) - 1:
        left = (hr[k] - hr[k - 1]) / (hq[k] - hq[k - 1])
        right = (hr[k + 1] - hr[k]) / (hq[k + 1] - hq[k])
        if right > left:
            del hq[k], hr[k]
            k = max(k - 1, 1)
        else:
            k += 1
    hq, hr = np.array(hq), np.array(hr)
    slopes = np.diff(hr) / np.diff(hq)
    return IronedCurve(hq, hr, slopes)


def best_price(dist: PiecewiseDistribution, c: float = 0.0, lower: float = 0.0,
               prefer: str = "high") -> tuple[float, float]:
    """Maximise ``(p - c) * P(X >= p)`` over ``p >= lower`` (``p = inf`` allowed).

    Returns ``(price, value)``.  Near-ties (relative 1e-9) go to the largest
    price when ``prefer == "high"`` and to the smallest otherwise.
    """
    cand_p: list[float] = [lower]
    cand_p += [float(x) for x in dist.characteristic_points() if x >= lower]
    ps = np.array(cand_p, dtype=float)
    vals = (ps - c) * _arr(dist.sf_left(ps))
    best_p = list(ps)
    best_v = list(vals)
    C = dist._c
    s_lower = float(dist.sf(lower))
    for j, s in enumerate(C["segs"]):
        if s.hi <= lower:
            continue
        bottom = dist._above(j)
        top = bottom + C["seg_mass"][j]
        if s.lo < lower:
            top = min(top, s_lower)
        if top <= bottom:
            continue
        shi = C["seg_sf_hi"][j]

        def g(qv, s=s, bottom=bottom, shi=shi):
            with np.errstate(divide="ignore", invalid="ignore"):
                p = np.clip(s.isf(np.maximum(qv - bottom + shi, 0.0)), s.lo, s.hi)
            return (p - c) * qv, p

        lo_q = bottom if bottom > 0 else top * 1e-12
        grid = np.unique(np.concatenate([np.linspace(lo_q, top, 40),
                                         np.geomspace(max(lo_q, top * 1e-12), top, 40)]))
        gv, gp = g(grid)
        gv = np.nan_to_num(gv, nan=-INF)
        k = int(np.argmax(gv))
        best_p.append(float(gp[k]))
        best_v.append(float(gv[k]))

        # stationary points: d/dq (p - c) q = (p - c) - q / f(p)
        def slope(qv, s=s, g=g):
            _, p = g(np.atleast_1d(qv))
            with np.errstate(divide="ignore", invalid="ignore"):
                return (p - c) - np.atleast_1d(qv) / s.pdf(p)

        hs = slope(grid)
        ok = np.isfinite(hs)
        change = np.nonzero(ok[:-1] & ok[1:] & (np.sign(hs[:-1]) != np.sign(hs[1:])))[0]
        for i in change:
            try:
                qr = optimize.brentq(lambda x: float(slope(x)[0]), grid[i], grid[i + 1],
                                     xtol=1e-300, rtol=4 * np.finfo(float).eps)
            except ValueError:
                continue
            rv, rp = g(np.array([qr]))
            best_p.append(float(rp[0]))
            best_v.append(float(rv[0]))
    r0 = dist.revenue_at_zero
    if r0 > 0:
        best_p.append(INF)
        best_v.append(r0)
    bp = np.array(best_p)
    bv = np.array(best_v)
    top_v = float(np.max(bv))
    near = bv >= top_v - 1e-9 * max(abs(top_v), 1e-300)
    choice = np.max(bp[near]) if prefer == "high" else np.min(bp[near])
    return float(choice), top_v


def monopoly(dist: PiecewiseDistribution, prefer: str = "high") -> MonopolyPoint:
    """Monopoly quantile, reserve and revenue under sale-probability revenue."""
    r, rev = best_price(dist, 0.0, 0.0, prefer)
    q = 0.0 if math.isinf(r) else float(dist.sf_left(r))
    return MonopolyPoint(q, r, rev)


# ---------------------------------------------------------------------------
# pointwise virtual quantities


def _continuous_segment(dist: PiecewiseDistribution, v: float) -> Segment:
    if dist.atom_mass(v) > 0:
        raise UndefinedPointError(f"value {v} is an atom; use the ironed slope")
    for s in dist._c["segs"]:
        if s.lo <= v < s.hi:
            if float(s.pdf(v)) <= 0:
                break
            return s
    raise UndefinedPointError(f"no density at value {v}")


def virtual_value(dist: PiecewiseDistribution, v: float) -> float:
    _continuous_segment(dist, v)
    return float(v - dist.sf(v) / dist.pdf(v))


def hazard_rate(dist: PiecewiseDistribution, v: float) -> float:
    _continuous_segment(dist, v)
    return float(dist.pdf(v) / dist.sf(v))


def cum_hazard(dist: PiecewiseDistribution, v: float) -> float:
    _continuous_segment(dist, v)
    return _cum_hazard_value(float(dist.cdf(v)), float(dist.sf(v)))


def _cum_hazard_value(F: float, S: float) -> float:
    if S <= 0:
        return INF
    return -math.log1p(-F) if F < 0.5 else -math.log(S)


def phi_ce(dist: PiecewiseDistribution, v: float) -> float:
    """Conditional expected virtual value ``-v (1 - F(v)) / F(v)``."""
    F = float(dist.cdf(v))
    if F <= 0:
        raise DomainError("conditional expected virtual value needs F(v) > 0")
    return -v * float(dist.sf(v)) / F


def h_ce(dist: PiecewiseDistribution, v: float) -> float:
    """Conditional expected hazard rate ``H(v) / v``."""
    if v <= 0:
        raise DomainError("conditional expected hazard rate needs v > 0")
    return _cum_hazard_value(float(dist.cdf(v)), float(dist.sf(v))) / v


def partial_expectation(dist: PiecewiseDistribution, t: float) -> float:
    """``E[v * 1{v >= t}]`` including an atom at ``t``."""
    if t < 0:
        raise DomainError("threshold must be nonnegative")
    return t * float(dist.sf_left(t)) + dist.integral_sf(t, INF)


def expected_min(dist: PiecewiseDistribution, t: float) -> float:
    """``E[min(X, t)]``."""
    return dist.integral_sf(0.0, t)


def truncate(dist: PiecewiseDistribution, t: float) -> PiecewiseDistribution:
    """Collapse all mass at or above ``t`` into an atom at ``t``."""
    if not t > dist.support_inf:
        raise DomainError("truncation point must exceed the support infimum")
    atoms = [(v, p) for v, p in dist.atoms if v < t and p > 0]
    top = float(dist.sf_left(t))
    if top > 0:
        atoms.append((t, top))
    segs = []
    for s in dist.segments:
        if s.lo >= t:
            continue
        segs.append(s if s.hi <= t else s.with_bounds(s.lo, t))
    return PiecewiseDistribution(tuple(atoms), tuple(segs))


def point_mass(x: float) -> PiecewiseDistribution:
    return PiecewiseDistribution(((float(x), 1.0),), ())


def discrete(values: Sequence[float], probs: Sequence[float]) -> PiecewiseDistribution:
    agg: dict[float, float] = {}
    for v, p in zip(values, probs):
        agg[float(v)] = agg.get(float(v), 0.0) + float(p)
    return PiecewiseDistribution(tuple(agg.items()), ())
