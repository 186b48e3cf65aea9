import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auctionlab import catalog, fuzz
from auctionlab.dist_core import (
    PiecewiseDistribution, cum_hazard, discrete, h_ce, hazard_rate, iron, monopoly,
    partial_expectation, phi_ce, point_mass, quantile_grid, revenue_curve, truncate, virtual_value,
)
from auctionlab.errors import DomainError, UndefinedPointError, ValidationError

from tests import oracles

E = math.e
ER = catalog.equal_revenue()
EXP = catalog.exponential(1.0)
F1 = catalog.f1_atom_at_two()
F2 = catalog.f2_exp_atom_at_one()

seeds = st.integers(0, 2**32 - 1)


# -- cdf -----------------------------------------------------------------------


def test_cdf_examples():
    assert ER.cdf(2.0) == pytest.approx(0.5, abs=1e-15)
    assert EXP.cdf(0.0) == 0.0
    assert F1.cdf(2.0) == pytest.approx(0.5, abs=1e-15)
    assert F1.cdf_left(2.0) == 0.0


def test_cdf_outside_support():
    assert ER.cdf(0.5) == 0.0
    assert catalog.uniform(0, 1).cdf(3.0) == 1.0


def test_validation_rejects_bad_mass():
    with pytest.raises(ValidationError):
        discrete([1.0, 2.0], [0.5, 0.6])


# -- prices and revenue curve ---------------------------------------------------


def test_price_examples():
    assert ER.price(0.25) == pytest.approx(4.0, rel=1e-12)
    assert EXP.price(1 / E) == pytest.approx(1.0, rel=1e-12)
    assert catalog.rational(1.0, 0.0).price(0.5) == pytest.approx(1.0, rel=1e-12)


def test_price_domain():
    with pytest.raises(DomainError):
        ER.price(1.5)


def test_revenue_curve_examples():
    for q in (1e-6, 0.1, 0.5, 1.0):
        assert revenue_curve(ER, q).revenue == pytest.approx(1.0, rel=1e-12)
    assert revenue_curve(EXP, 1 / E).revenue == pytest.approx(1 / E, rel=1e-12)
    d = catalog.atom_rational(0.8725, 1 / 5, 0.8725)
    assert d.revenue_at_zero == pytest.approx(0.2, rel=1e-12)
    assert revenue_curve(d, 1.0).revenue == pytest.approx(0.8725, rel=1e-12)


def test_revenue_point_identity():
    p = revenue_curve(EXP, 0.3)
    assert p.revenue == p.q * p.price


# -- ironing ----------------------------------------------------------------------


def test_iron_regular_is_identity():
    d = catalog.rational(1.0, 0.0)
    c = iron(d, 4096)
    q = np.linspace(0, 1, 2001)
    assert np.max(np.abs(c.value(q) - d.revenue(q))) < 1e-6


def test_iron_f1_against_bruteforce_hull():
    # concave envelope of 1e5 sampled revenue points
    q = np.concatenate([[0.0], np.geomspace(1e-9, 1, 100_000)])
    r = np.asarray(F1.revenue(q))
    hull = []
    for x, y in zip(q, r):
        while len(hull) >= 2 and ((hull[-1][1] - hull[-2][1]) * (x - hull[-2][0])
                                  <= (y - hull[-2][1]) * (hull[-1][0] - hull[-2][0])):
            hull.pop()
        hull.append((x, y))
    hq, hr = map(np.array, zip(*hull))
    c = iron(F1, 4096)
    grid = np.linspace(0, 1, 5001)
    assert np.max(np.abs(c.value(grid) - np.interp(grid, hq, hr))) < 1e-4
    # the atom at 2 is ironed into a line ending at (1, 2)
    assert c.value(1.0) == pytest.approx(2.0)
    assert c.value(0.5) == pytest.approx(1.5, abs=1e-6)


def test_iron_point_mass():
    c = iron(point_mass(1.0))
    q = np.linspace(0, 1, 101)
    np.testing.assert_allclose(c.value(q), q, atol=1e-12)


# -- monopoly ---------------------------------------------------------------------


def test_monopoly_exponential():
    m = monopoly(EXP)
    assert m.q_star == pytest.approx(1 / E, abs=1e-9)
    assert m.r_star == pytest.approx(1.0, abs=1e-9)
    assert m.rev_star == pytest.approx(1 / E, abs=1e-12)


def test_monopoly_truncated_er_prefers_high_price():
    m = monopoly(catalog.er_truncated(10.0))
    assert m.r_star == pytest.approx(10.0)
    assert m.q_star == pytest.approx(0.1)
    assert m.rev_star == pytest.approx(1.0)


def test_monopoly_bmr_small():
    low = monopoly(catalog.bmr_small(), prefer="low")
    assert low.r_star == 1.0
    assert low.rev_star == pytest.approx(oracles.BMR_SMALL_REV, abs=1e-12)
    # a brute-force price sweep never beats the atom at 1
    p = np.linspace(1.0, 20.0, 1_000_001)
    assert np.max(p * np.asarray(catalog.bmr_small().sf_left(p))) <= 1.0 + 1e-12


# -- pointwise functionals -----------------------------------------------------------


def test_exponential_pointwise():
    for v in (0.3, 1.0, 4.0):
        assert virtual_value(EXP, v) == pytest.approx(v - 1)
        assert hazard_rate(EXP, v) == pytest.approx(1.0)
        assert cum_hazard(EXP, v) == pytest.approx(v)


def test_er_virtual_value_zero():
    for v in (1.5, 3.0, 100.0):
        assert virtual_value(ER, v) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_rational_virtual_value_is_revenue_slope(a):
    d = catalog.rational(a, 0.0)
    for v in (0.2, 1.0, 5.0):
        q = float(d.sf(v))
        h = 1e-6 * q
        slope = (d.revenue(q + h) - d.revenue(q - h)) / (2 * h)
        assert virtual_value(d, v) == pytest.approx(slope, rel=1e-5, abs=1e-7)


def test_undefined_at_atoms():
    with pytest.raises(UndefinedPointError):
        virtual_value(F1, 2.0)


def test_conditional_expectations():
    assert phi_ce(ER, 2.0) == pytest.approx(-2.0)
    assert h_ce(EXP, 1.0) == pytest.approx(1.0)
    assert h_ce(F2, 1.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        phi_ce(EXP, 0.0)
    with pytest.raises(DomainError):
        h_ce(EXP, 0.0)


def test_partial_expectation_examples():
    assert partial_expectation(EXP, 0.0) == pytest.approx(1.0, rel=1e-12)
    assert partial_expectation(point_mass(3.0), 2.0) == 3.0
    d = catalog.bmr_small()
    eps = 1e-7
    assert partial_expectation(d, 1 + eps) == pytest.approx((E + 1) * math.exp(-1 / E), abs=1e-6)


# -- sampling and truncation -----------------------------------------------------------


def test_sample_examples():
    assert catalog.uniform(0, 1).sample(0.3) == pytest.approx(0.3)
    assert ER.sample(0.5) == pytest.approx(2.0)
    assert F1.sample(0.25) == 2.0


def test_truncate_examples():
    t = math.log(2)
    d = truncate(EXP, t)
    assert d.atom_mass(t) == pytest.approx(0.5, abs=1e-15)
    d = truncate(ER, 10.0)
    assert d.atom_mass(10.0) == pytest.approx(0.1, abs=1e-15)
    v = np.linspace(1.0, 9.99, 50)
    np.testing.assert_array_equal(d.cdf(v), ER.cdf(v))
    with pytest.raises(DomainError):
        truncate(ER, 1.0)


def test_json_round_trip():
    for d in (ER, EXP, F1, F2, catalog.power_of_er(3.0), catalog.reg_qmhr_not_mhr()):
        back = PiecewiseDistribution.from_json(d.to_json())
        assert back == d


# -- properties -------------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_ironed_curve_majorizes_and_is_concave(seed):
    d = fuzz.random_any(np.random.default_rng(seed))
    c = iron(d, 1024)
    assert np.all(np.diff(c.slopes) <= 1e-9 * max(1.0, np.abs(c.slopes).max()))
    q = quantile_grid(d, 1024)
    scale = max(1.0, c.max_value)
    assert np.all(c.value(q) >= np.asarray(d.revenue(q)) - 1e-9 * scale)


@settings(max_examples=60, deadline=None)
@given(seeds, st.floats(0.0, 1.0))
def test_sample_inverts_cdf(seed, u):
    d = fuzz.random_any(np.random.default_rng(seed))
    x = float(d.sample(u))
    assert d.cdf(x) >= u - 1e-12
    assert d.cdf_left(x) <= u + 1e-12


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_phi_ce_identity(seed):
    rng = np.random.default_rng(seed)
    d = catalog.exponential(float(rng.uniform(0.3, 3.0)))
    v = float(rng.uniform(0.05, 5.0))
    assert phi_ce(d, v) * d.cdf(v) == pytest.approx(-v * d.sf(v), rel=1e-8, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.05, 0.95))
def test_truncate_then_mean(seed, q):
    d = fuzz.random_mhr(np.random.default_rng(seed))
    t = float(d.price(q))
    if t <= d.support_inf:
        return
    lhs = partial_expectation(truncate(d, t), 0.0)
    rhs = (partial_expectation(d, 0.0) - partial_expectation(d, t)) + t * float(d.sf_left(t))
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_mass_sums_to_one(seed):
    d = fuzz.random_any(np.random.default_rng(seed))
    assert float(d.cdf(d.support_sup if math.isfinite(d.support_sup) else 1e300)) == \
        pytest.approx(1.0, abs=1e-9)
