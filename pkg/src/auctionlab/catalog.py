"""Named distributions and canonical instances used across the package."""

from __future__ import annotations

import math

from scipy.special import lambertw

from .dist_core import (
    INF, Exponential, PiecewiseDistribution, PowerOfER, Rational, Uniform,
    distribution, point_mass, truncate,
)

E = math.e


def exponential(lam: float = 1.0, shift: float = 0.0) -> PiecewiseDistribution:
    return distribution([], [Exponential(shift, INF, lam=lam, shift=shift)])


def uniform(lo: float = 0.0, hi: float = 1.0) -> PiecewiseDistribution:
    return distribution([], [Uniform(lo, hi, a=lo, b=hi)])


def rational(a: float = 1.0, b: float = 0.0) -> PiecewiseDistribution:
    """``F(v) = (v - b) / (v - b + a)`` on ``[b, inf)``."""
    return distribution([], [Rational(b, INF, a=a, b=b)])


def equal_revenue() -> PiecewiseDistribution:
    """``F(v) = 1 - 1/v`` on ``[1, inf)``."""
    return rational(1.0, 1.0)


def er_truncated(h: float) -> PiecewiseDistribution:
    return truncate(equal_revenue(), h)


def atom_rational(a: float, scale: float, lo: float) -> PiecewiseDistribution:
    """``F(v) = v / (v + scale)`` on ``[lo, inf)``: atom at ``lo`` then a rational tail."""
    if lo <= 0:
        return rational(scale, 0.0)
    mass = lo / (lo + scale)
    return distribution([(lo, mass)], [Rational(lo, INF, a=scale, b=0.0)])


def f1_atom_at_two() -> PiecewiseDistribution:
    """``F(v) = (1 - 1/v) 1{v >= 2}``: max of an ER value and the constant 2."""
    return distribution([(2.0, 0.5)], [Rational(2.0, INF, a=1.0, b=1.0)])


def f2_exp_atom_at_one() -> PiecewiseDistribution:
    """``F(v) = (1 - e^-v) 1{v >= 1}``: max of an Exp(1) value and the constant 1."""
    return distribution([(1.0, 1.0 - math.exp(-1.0))], [Exponential(1.0, INF, lam=1.0, shift=0.0)])


def reg_qmhr_not_mhr() -> PiecewiseDistribution:
    """``1 - 1/(e v)`` on ``[1/e, 1]`` followed by ``1 - e^-v``."""
    return distribution([], [Rational(1 / E, 1.0, a=1 / E, b=1 / E),
                             Exponential(1.0, INF, lam=1.0, shift=0.0)])


def power_of_er(n: float) -> PiecewiseDistribution:
    return distribution([], [PowerOfER(1.0, INF, n=n)])


def bmr_small() -> PiecewiseDistribution:
    """``1 - e^{-v/e}`` on ``[1, inf)`` with its atom at 1."""
    return distribution([(1.0, -math.expm1(-1 / E))], [Exponential(1.0, INF, lam=1 / E, shift=0.0)])


def bmr_plus_small() -> PiecewiseDistribution:
    """``1 - 1/v`` on ``[1, e]`` then ``1 - e^{-v/e}``; mean 3."""
    return distribution([], [Rational(1.0, E, a=1.0, b=1.0),
                             Exponential(E, INF, lam=1 / E, shift=0.0)])


# -- example instances --------------------------------------------------------

def lambert_a_star() -> float:
    """Atom location minimising ``(a e^{-1/a} + 1) / (a + 1)``."""
    w = float(lambertw(-1 / E**2, -1).real)
    return -1.0 / (w + 2.0)


def lambert_ratio() -> float:
    w = float(lambertw(-1 / E**2, -1).real)
    return 1.0 + 1.0 / w


def bour_iid(n: int, a: float = 0.8725) -> list[PiecewiseDistribution]:
    """``n`` i.i.d. copies of ``v / (v + 1/n)`` on ``[a, inf)``."""
    d = atom_rational(a, 1.0 / n, a)
    return [d] * n


def boup_iid(n: int) -> list[PiecewiseDistribution]:
    return [power_of_er(n)] * n


def spa_dup_asymmetric(a: float = 1.75088) -> list[PiecewiseDistribution]:
    return [point_mass(a), rational(1.0, 0.0)]


def ip_asymmetric(a: float = 1.0, eps: float = 1e-3) -> list[PiecewiseDistribution]:
    return [uniform(1.0, 1.0 + eps), rational(a, 0.0)]


def ip_iid_cross(n: int, a: float, eps: float) -> float:
    """Crossing point of ``(v - 1)/eps`` and ``n v / (n v + a)``."""
    b = n + eps * n - a
    return (b + math.sqrt(b * b + 4.0 * n * a)) / (2.0 * n)


def ip_iid(n: int, a: float = 0.6016, eps: float = 1e-3) -> list[PiecewiseDistribution]:
    v = ip_iid_cross(n, a, eps)
    d = distribution([], [Uniform(1.0, v, a=1.0, b=1.0 + eps),
                          Rational(v, INF, a=a / n, b=0.0)])
    return [d] * n


def hierarchy_witnesses() -> list[tuple[str, PiecewiseDistribution, tuple[bool, bool, bool, bool]]]:
    """Witnesses with expected (regular, MHR, quasi-regular, quasi-MHR) verdicts."""
    return [
        ("exponential", exponential(1.0), (True, True, True, True)),
        ("regular_qmhr_not_mhr", reg_qmhr_not_mhr(), (True, False, True, True)),
        ("equal_revenue", equal_revenue(), (True, False, True, False)),
        ("f2_exp_atom_at_one", f2_exp_atom_at_one(), (False, False, True, True)),
        ("f1_atom_at_two", f1_atom_at_two(), (False, False, True, False)),
    ]
