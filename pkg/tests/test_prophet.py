import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auctionlab import catalog, fuzz
from auctionlab.dist_core import point_mass
from auctionlab.errors import DomainError
from auctionlab.prophet import competitive_ratio, expected_minimum, optimal_stopping_values

from tests import oracles

EXP = catalog.exponential(1.0)


def test_exponential_recursion():
    v = optimal_stopping_values(EXP, 50)
    assert v[-1] == pytest.approx(1.0, rel=1e-12)
    for a, b in zip(v, v[1:]):
        assert a == pytest.approx(1 - math.exp(-b), rel=1e-10)


def test_single_round():
    assert optimal_stopping_values(catalog.uniform(0, 2), 1) == [pytest.approx(1.0)]
    assert competitive_ratio(catalog.uniform(0, 2), 1).ratio == pytest.approx(1.0, rel=1e-9)


def test_point_mass():
    assert optimal_stopping_values(point_mass(5.0), 7) == [5.0] * 7
    assert competitive_ratio(point_mass(5.0), 7).ratio == pytest.approx(1.0)


def test_bad_inputs():
    with pytest.raises(DomainError):
        optimal_stopping_values(EXP, 0)


def test_expected_minimum_closed_forms():
    assert expected_minimum(EXP, 100) == pytest.approx(1 / 100, rel=1e-9)
    assert expected_minimum(catalog.uniform(0, 1), 100) == pytest.approx(1 / 101, rel=1e-9)


def test_exponential_ratio_against_mpmath():
    run = competitive_ratio(EXP, 1000)
    assert run.ratio == pytest.approx(oracles.EXP_PROPHET_1000, rel=1e-9)
    assert 1.85 <= run.ratio <= 2.0
    ratios = [competitive_ratio(EXP, n).ratio for n in (10, 100, 1000)]
    assert ratios == sorted(ratios)


def test_uniform_ratio():
    assert competitive_ratio(catalog.uniform(0, 1), 100).ratio <= 2.0


def test_witnesses_below_two():
    for name, d, expected in catalog.hierarchy_witnesses():
        if not expected[3]:
            continue
        for n in (10, 100, 1000):
            assert competitive_ratio(d, n).ratio <= 2 + 1e-6, (name, n)


def test_warns_outside_class():
    with pytest.warns(RuntimeWarning):
        competitive_ratio(catalog.er_truncated(10.0), 3)


def test_thresholds_and_json():
    run = competitive_ratio(EXP, 5)
    js = run.to_json()
    assert js["thresholds"][-1] == "inf" and len(js["thresholds"]) == 5
    t = run.thresholds[:-1]
    assert all(a <= b for a, b in zip(t, t[1:]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 200))
def test_values_nondecreasing_and_ratio_at_least_one(seed, n):
    d = fuzz.random_quasi_mhr(np.random.default_rng(seed))
    v = optimal_stopping_values(d, n)
    assert all(a <= b + 1e-12 for a, b in zip(v, v[1:]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = competitive_ratio(d, n)
    assert r.ratio >= 1 - 1e-9
    assert r.ratio <= 2 + 1e-6
