import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auctionlab import catalog, fuzz
from auctionlab.dist_core import PiecewiseDistribution, discrete, truncate
from auctionlab.errors import ContractError
from auctionlab.family import (
    Family, check, check_mhr, check_quasi_mhr, check_quasi_regular, check_regular,
    duplicating_expectations, duplicating_virtual_ratio, hierarchy_witnesses, memberships,
    monopoly_quantile_bound, revenue_welfare_ratios,
)

E = math.e
EXP = catalog.exponential(1.0)
ER = catalog.equal_revenue()
F1 = catalog.f1_atom_at_two()
F2 = catalog.f2_exp_atom_at_one()


def test_regular_examples():
    assert check_regular(catalog.rational(1.0, 0.0)).verdict
    assert not check_regular(F1).verdict
    assert check_regular(EXP).verdict


def test_mhr_examples():
    assert check_mhr(EXP).verdict
    w = catalog.reg_qmhr_not_mhr()
    assert not check_mhr(w).verdict
    assert check_regular(w).verdict and check_quasi_mhr(w).verdict
    assert not check_mhr(ER).verdict


def test_quasi_regular_examples():
    assert check_quasi_regular(F1).verdict
    d = catalog.atom_rational(0.8725, 1 / 5, 0.8725)
    assert check_quasi_regular(d).verdict
    assert not check_quasi_regular(discrete([1.0, 100.0], [0.9, 0.1])).verdict


def test_quasi_mhr_examples():
    assert check_quasi_mhr(F2).verdict and not check_regular(F2).verdict
    assert not check_quasi_mhr(ER).verdict
    assert check_quasi_regular(F1).verdict
    assert not check_regular(F1).verdict and not check_quasi_mhr(F1).verdict


def test_report_fields():
    r = check(EXP, "quasi-mhr", 512)
    assert r.family is Family.QUASI_MHR
    assert r.grid_size == 512
    assert r.verdict == (r.worst_violation[1] <= r.tolerance)
    assert set(r.to_json()) >= {"family", "verdict", "worst_violation", "grid_size", "tolerance"}


def test_hierarchy_witnesses():
    ws = hierarchy_witnesses()
    assert len(ws) == 5
    for d, expected in ws:
        assert memberships(d) == tuple(expected)
    table = {name: exp for name, _, exp in catalog.hierarchy_witnesses()}
    assert table["exponential"] == (True, True, True, True)
    assert table["equal_revenue"] == (True, False, True, False)
    assert table["f1_atom_at_two"] == (False, False, True, False)


@pytest.mark.parametrize("method", ["revenue", "phi_ce", "tail_bound"])
def test_quasi_regular_characterizations_agree(method):
    for name, d, expected in catalog.hierarchy_witnesses():
        assert check_quasi_regular(d, 2048, method=method).verdict == expected[2], name
    assert not check_quasi_regular(discrete([1.0, 100.0], [0.9, 0.1]), 2048, method=method).verdict


@pytest.mark.parametrize("method", ["hazard", "h_ce", "tail_bound"])
def test_quasi_mhr_characterizations_agree(method):
    for name, d, expected in catalog.hierarchy_witnesses():
        assert check_quasi_mhr(d, 2048, method=method).verdict == expected[3], name


def test_monopoly_quantile_bound():
    q, ok = monopoly_quantile_bound(EXP)
    assert q == pytest.approx(1 / E, abs=1e-9) and ok
    q, ok = monopoly_quantile_bound(F2)
    assert q == pytest.approx(1.0) and ok
    q, ok = monopoly_quantile_bound(truncate(EXP, 2.0))
    assert q >= 1 / E - 1e-9 and ok
    with pytest.raises(ContractError):
        monopoly_quantile_bound(ER)


def test_revenue_welfare_ratios():
    best, _ = revenue_welfare_ratios(EXP, 0.0)
    assert best == pytest.approx(1 / E, rel=1e-9)
    _, post = revenue_welfare_ratios(catalog.bmr_small(), 1 + 1e-9)
    assert post == pytest.approx(1 / (E + 1), abs=1e-6)


def test_normalized_welfare_bound():
    # the welfare-maximising normalized quasi-MHR instance has mean exactly 3
    assert catalog.bmr_plus_small().mean <= 3 + 1e-6
    assert catalog.bmr_plus_small().mean == pytest.approx(3.0, abs=1e-9)


def test_duplicating_exponential_tight():
    phi, val = duplicating_expectations(EXP, 0.0)
    assert phi == pytest.approx(0.5, abs=1e-10)
    assert val == pytest.approx(1.5, abs=1e-10)
    assert duplicating_virtual_ratio(EXP, 0.0) == pytest.approx(1 / 3, abs=1e-10)


def test_duplicating_uniform_closed_form():
    # int_0^1 (2v - 1) 2v dv = 1/3 and int_0^1 v 2v dv = 2/3
    phi, val = duplicating_expectations(catalog.uniform(0, 1), 0.0)
    assert phi == pytest.approx(1 / 3, abs=1e-10)
    assert val == pytest.approx(2 / 3, abs=1e-10)
    assert duplicating_virtual_ratio(catalog.uniform(0, 1)) >= 1 / 3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_duplicating_ratio_mhr(seed):
    d = fuzz.random_mhr(np.random.default_rng(seed))
    assert duplicating_virtual_ratio(d, 0.0) >= 1 / 3 - 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_implication_chain(seed):
    reg, mhr, qr, qmhr = memberships(fuzz.random_any(np.random.default_rng(seed)), 2048)
    if mhr:
        assert reg and qmhr
    if reg or qmhr:
        assert qr


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_generators_produce_their_class(seed):
    rng = np.random.default_rng(seed)
    assert check_mhr(fuzz.random_mhr(rng), 2048).verdict
    assert check_regular(fuzz.random_regular(rng), 2048).verdict
    assert check_quasi_regular(fuzz.random_quasi_regular(rng), 2048).verdict
    assert check_quasi_mhr(fuzz.random_quasi_mhr(rng), 2048).verdict


def test_mhr_catches_small_hazard_drop():
    # piecewise-uniform density dropping 0.26% at v = 1.2: the hazard rate falls there
    knots, dens = [0.0, 1.2, 2.3], [0.264, 0.264 * (1 - 0.0026)]
    F = [0.0, dens[0] * 1.2]
    F.append(F[1] + dens[1] * 1.1)
    dens.append((1 - F[2]) / 0.5)
    segs = [{"lo": lo, "hi": hi, "kind": "affine",
             "params": {"c0": F[j] - dens[j] * lo, "c1": dens[j]}}
            for j, (lo, hi) in enumerate(zip(knots, knots[1:] + [2.8]))]
    d = PiecewiseDistribution.from_json({"atoms": [], "segments": segs})
    for g in (1024, 2048, 4096):
        assert not check_mhr(d, g).verdict
    assert not check_regular(d, 4096).verdict
