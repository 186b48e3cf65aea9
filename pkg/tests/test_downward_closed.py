import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auctionlab import catalog, fuzz
from auctionlab import downward_closed as dc
from auctionlab.dist_core import monopoly
from auctionlab.errors import CapabilityError, ValidationError
from auctionlab.mechanisms import bom_revenue

from tests import oracles

E = math.e
EXP = catalog.exponential(1.0)


# -- environments ----------------------------------------------------------------------


def test_explicit_env_validation():
    env = dc.ExplicitEnv.from_sets([[0], [1], [2], [0, 1]], n=3)
    with pytest.raises(ValidationError):
        dc.ExplicitEnv.from_sets([[0, 1], [2]], n=3)
    assert oracles.downward_closed(env.sets())
    assert () in env.sets()
    with pytest.raises(CapabilityError):
        dc.ExplicitEnv.from_sets([[i] for i in range(23)], n=23)


def test_environment_json_round_trip():
    env = dc.ExplicitEnv.from_sets([[0], [1], [0, 1]], n=2)
    back = dc.environment_from_json(env.to_json())
    assert back.sets() == env.sets()
    cap = dc.CapacityWithRival(small=5, cap=2, big_value=3.5)
    back = dc.environment_from_json(cap.to_json())
    assert (back.small, back.cap, back.big_value) == (5, 2, 3.5)


def test_bmr_environment_shape():
    m = 512
    env, dists = dc.bmr_environment(m)
    eps = math.sqrt(math.log(m) / m)
    assert env.small == m and len(dists) == m and env.n == m + 1
    assert env.cap == math.ceil((math.exp(-1 / E) + eps) * m)
    assert env.big_value == pytest.approx(((E + 1) * math.exp(-1 / E) - eps) * m)


# -- VCG --------------------------------------------------------------------------------


def test_vcg_second_price():
    winners, pay = dc.vcg(dc.single_item(2), [3.0, 5.0])
    assert winners == [1] and pay == {1: 3.0}


def test_vcg_capacity_with_rival():
    env = dc.CapacityWithRival(small=1, cap=1, big_value=3.0)
    winners, pay = dc.vcg(env, [4.0])
    assert winners == [0] and pay[0] == pytest.approx(3.0)


def test_vcg_empty_environment():
    env = dc.ExplicitEnv.from_sets([], n=3)
    winners, pay = dc.vcg(env, [1.0, 2.0, 3.0])
    assert winners == [] and sum(pay.values()) == 0.0


def test_vcg_rejects_nonfinite():
    with pytest.raises(ValidationError):
        dc.vcg(dc.single_item(2), [1.0, math.inf])


def test_vcg_matches_bruteforce_on_random_envs():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        env = dc.random_explicit_env(n, rng)
        vals = rng.integers(0, 6, size=n).astype(float) + rng.random(n) * (rng.random() < 0.5)
        winners, pay = dc.vcg(env, vals)
        ref_win, ref_pay = oracles.vcg(env.sets(), list(vals))
        assert tuple(winners) == ref_win
        for i in winners:
            assert pay[i] == pytest.approx(ref_pay[i], abs=1e-12)
            assert -1e-12 <= pay[i] <= vals[i] + 1e-12


def test_vcg_winner_monotone():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        env = dc.random_explicit_env(n, rng)
        vals = rng.exponential(size=n)
        winners, pay = dc.vcg(env, vals)
        for i in winners:
            up = vals.copy()
            up[i] += rng.exponential()
            assert i in dc.vcg(env, up)[0]
            # bidding just above the payment still wins
            at = vals.copy()
            at[i] = pay[i] + 1e-9
            assert i in dc.vcg(env, at)[0]


def test_capacity_vcg_matches_bruteforce():
    rng = np.random.default_rng(2)
    for _ in range(300):
        m = int(rng.integers(1, 6))
        cap = int(rng.integers(0, m + 1))
        big = float(rng.uniform(0, 6))
        env = dc.CapacityWithRival(small=m, cap=cap, big_value=big)
        vals = rng.uniform(0, 3, size=m)
        feasible = [s for r in range(cap + 1) for s in itertools.combinations(range(m), r)]
        feasible.append((m,))
        ref_win, ref_pay = oracles.vcg(feasible, list(vals) + [big])
        winners, pay = dc.vcg(env, vals)
        assert sum(([vals[i] for i in winners if i < m]), 0.0) + big * (m in winners) == \
            pytest.approx(sum(([vals[i] for i in ref_win if i < m]), 0.0) + big * (m in ref_win))
        assert sum(pay.values()) == pytest.approx(sum(ref_pay.values()), abs=1e-9)


def test_duplicate_vcg_matches_bruteforce():
    rng = np.random.default_rng(9)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        env = dc.random_explicit_env(n, rng)
        v, v2 = rng.exponential(size=(1, n)), rng.exponential(size=(1, n))
        # copy i of buyer j is buyer j + i n; feasible sets pick one copy per member
        dup_sets = [tuple(j + c * n for j, c in zip(s, pick))
                    for s in env.sets() for pick in itertools.product((0, 1), repeat=len(s))]
        vals = list(v[0]) + list(v2[0])
        win, pay = oracles.vcg(dup_sets, vals)
        assert all(not (j in win and j + n in win) for j in range(n))
        got = dc._dup_vcg_revenue(env, v, v2)[0]
        assert got == pytest.approx(sum(pay.values()), abs=1e-12)


# -- revenue estimators ---------------------------------------------------------------------


@pytest.mark.parametrize("mode", ["eager", "lazy", "adaptive"])
def test_single_buyer_reserves(mode):
    d = catalog.uniform(0, 1)
    r = dc.monopoly_reserves_revenue(dc.single_item(1), [d], mode, 100_000, 4)
    assert abs(r.revenue - monopoly(d).rev_star) <= 3 * r.std_error


def test_lazy_equals_adaptive_for_regular():
    env = dc.ExplicitEnv.from_sets([[0], [1], [2], [0, 1]], n=3)
    dists = [EXP, catalog.uniform(0, 2), catalog.rational(1.0, 0.0)]
    cols = dc.dc_profile_samples(env, dists, 100_000, 8)
    diff = cols["lazy"] - cols["adaptive"]
    se = diff.std(ddof=1) / math.sqrt(len(diff))
    assert abs(diff.mean()) <= 3 * se + 1e-12


def test_bom_single_item_consistent():
    dists = [EXP, catalog.f1_atom_at_two()]
    r = dc.bom_downward_closed(dc.single_item(2), dists, 200_000, 5)
    assert abs(r.revenue - bom_revenue(dists).revenue) <= 3 * r.std_error


def test_bom_bmr_lower_bounds():
    m = 512
    eps = math.sqrt(math.log(m) / m)
    env, dists = dc.bmr_environment(m)
    r = dc.bom_downward_closed(env, dists, 2000, 0)
    assert r.revenue >= ((E + 1) * math.exp(-1 / E) - eps) * m - 3 * r.std_error
    env, dists = dc.bmr_plus_environment(m)
    r = dc.bom_downward_closed(env, dists, 2000, 0)
    assert r.revenue >= (3 - eps) * m - 3 * r.std_error


def test_duplicate_vcg_examples():
    env = dc.single_item(1)
    r = dc.n_duplicate_vcg(env, [EXP], 200_000, 0)
    # min of two Exp(1) draws has mean 1/2, the larger one 3/2
    assert abs(r.revenue - 0.5) <= 3 * r.std_error
    assert r.revenue / 1.5 >= 1 / 3 - 3 * r.std_error
    r = dc.n_duplicate_vcg(env, [catalog.rational(1.0, 0.0)], 400_000, 1)
    assert r.revenue == pytest.approx(1.0, abs=0.05)


def test_eager_welfare_dominates_bom_welfare():
    rng = np.random.default_rng(3)
    for _ in range(5):
        n = int(rng.integers(2, 6))
        env = dc.random_explicit_env(n, rng)
        dists = [fuzz.random_quasi_mhr(rng) for _ in range(n)]
        cols = dc.dc_profile_samples(env, dists, 40_000, 2, modes=("vcg", "eager"))
        ew = cols["eager_welfare"]
        b = dc.bom_downward_closed(env, dists, 40_000, 2)
        se = math.hypot(ew.std(ddof=1) / math.sqrt(len(ew)), b.extra["welfare_std_error"])
        assert ew.mean() >= b.extra["welfare"] - 3 * se


def test_profile_samples_are_thread_independent(monkeypatch):
    env = dc.ExplicitEnv.from_sets([[0], [1], [2], [0, 1]], n=3)
    dists = [EXP, catalog.uniform(0, 2), catalog.f2_exp_atom_at_one()]
    monkeypatch.setenv("AUCTIONLAB_THREADS", "1")
    a = dc.dc_profile_samples(env, dists, 50_000, 13)
    monkeypatch.setenv("AUCTIONLAB_THREADS", "4")
    b = dc.dc_profile_samples(env, dists, 50_000, 13)
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_revenue_guarantees(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    env = dc.random_explicit_env(n, rng)
    dists = [fuzz.random_quasi_mhr(rng) for _ in range(n)]
    cols = dc.dc_profile_samples(env, dists, 20_000, seed % 1000)
    for key, c in (("eager", 1 / (E + 1)), ("lazy", 1 / (E + 1)), ("adaptive", 1 / 3),
                   ("dup", 1 / 3)):
        diff = cols[key] - c * cols["welfare"]
        se = diff.std(ddof=1) / math.sqrt(len(diff))
        assert diff.mean() >= -3 * se - 1e-12, key
