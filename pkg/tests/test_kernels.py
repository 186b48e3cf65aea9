import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auctionlab import _accel, _kernels_py

ck = pytest.importorskip("auctionlab._ckernels")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 300))
def test_upper_hull_parity(seed, n):
    rng = np.random.default_rng(seed)
    q = np.sort(rng.random(n))
    if rng.random() < 0.3:
        q = np.round(q, 1)  # repeated abscissae
    r = rng.random(n) * q
    np.testing.assert_array_equal(ck.upper_hull(q, r), _kernels_py.upper_hull(q, r))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_explicit_vcg_parity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    sets = np.unique(rng.integers(0, 2**n, size=int(rng.integers(1, 20)))).astype(np.int64)
    v = rng.exponential(size=(200, n))
    if rng.random() < 0.5:
        v = np.round(v)  # ties
    w1, p1 = ck.explicit_vcg(v, sets)
    w2, p2 = _kernels_py.explicit_vcg(v, sets)
    np.testing.assert_array_equal(w1, w2)
    np.testing.assert_array_equal(p1, p2)


def _backend(env):
    code = "from auctionlab import _accel; print(_accel.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={**os.environ, **env},
                         capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_backend_selection():
    assert _accel.BACKEND in ("cython", "python")
    assert _backend({"AUCTIONLAB_PURE": "1"}) == "python"
    assert _backend({"AUCTIONLAB_PURE": "0"}) == "cython"
