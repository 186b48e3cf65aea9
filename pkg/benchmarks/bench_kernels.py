"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel and workload with the best wall time of each
backend and the speedup.  Outputs are checked for equality first.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from auctionlab import _kernels_py as py

try:
    from auctionlab import _ckernels as cy
except ImportError:  # extension not built
    cy = None


def hull_case(n: int, rng):
    q = np.sort(rng.random(n))
    r = np.sqrt(q) * (1 - q) + 0.01 * rng.standard_normal(n)
    return (q, r)


def vcg_case(rows: int, n: int, rng):
    from auctionlab.downward_closed import random_explicit_env
    env = random_explicit_env(n, rng, n_max_sets=8)
    vals = np.ascontiguousarray(rng.exponential(size=(rows, n)))
    return (vals, env.masks)


def bench(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    opts = ap.parse_args()
    rng = np.random.default_rng(0)
    cases = [
        ("upper_hull", "n=4096", hull_case(4096, rng)),
        ("upper_hull", "n=262144", hull_case(1 << 18, rng)),
        ("explicit_vcg", "rows=16384 n=6", vcg_case(1 << 14, 6, rng)),
        ("explicit_vcg", "rows=16384 n=12", vcg_case(1 << 14, 12, rng)),
    ]
    print(f"{'kernel':<14}{'workload':<18}{'python [s]':>12}{'cython [s]':>12}{'speedup':>9}")
    for name, label, args in cases:
        t_py = bench(getattr(py, name), args, opts.repeat)
        if cy is None:
            print(f"{name:<14}{label:<18}{t_py:>12.4f}{'n/a':>12}{'':>9}")
            continue
        a, b = getattr(py, name)(*args), getattr(cy, name)(*args)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_array_equal(np.asarray(x), np.asarray(y))
        t_cy = bench(getattr(cy, name), args, opts.repeat)
        print(f"{name:<14}{label:<18}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
