"""Reproducible Monte Carlo plumbing.

Samples are produced in fixed-size chunks.  Chunk ``c`` of stream ``s`` under
seed ``seed`` always comes from a Philox generator keyed by ``(seed, s, c)``,
so results do not depend on how chunks are spread across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

CHUNK = 1 << 14


def thread_count() -> int:
    raw = os.environ.get("AUCTIONLAB_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    avail = os.cpu_count() or 1
    return max(1, min(cap, avail)) if cap > 0 else avail


def generator(seed: int, stream: int, chunk: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF,
                    ((stream & 0xFFFFFFFF) << 32) | (chunk & 0xFFFFFFFF)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(seed: int, stream: int, chunk: int, rows: int, cols: int) -> np.ndarray:
    """Open-interval uniforms; zero is mapped away so quantile lookups stay finite."""
    u = generator(seed, stream, chunk).random((rows, cols))
    return np.where(u == 0.0, 0.5 / 2**53, u)


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    samples: int


def _chunks(total: int, size: int):
    for c in range(math.ceil(total / size)):
        yield c, min(size, total - c * size)


def estimate(sample_fn: Callable[[int, int], np.ndarray], total: int,
             chunk_size: int = CHUNK) -> Estimate:
    """Mean and standard error of ``sample_fn(chunk_index, rows)`` outputs.

    ``sample_fn`` returns per-sample values (1-D).  Partial sums are combined
    in chunk order, so any thread count gives bit-identical output.
    """
    stats = map_chunks(lambda c, rows: _moments(sample_fn(c, rows)), total, chunk_size)
    return combine(stats)


def estimate_many(sample_fn: Callable[[int, int], np.ndarray], total: int,
                  chunk_size: int = CHUNK) -> list[Estimate]:
    """Like :func:`estimate` for functions returning a (rows, k) array."""
    stats = map_chunks(lambda c, rows: _moments_cols(sample_fn(c, rows)), total, chunk_size)
    k = len(stats[0][0])
    return [combine([(s[0][j], s[1][j], s[2]) for s in stats]) for j in range(k)]


def map_chunks(fn, total: int, chunk_size: int = CHUNK) -> list:
    jobs = list(_chunks(total, chunk_size))
    workers = min(thread_count(), len(jobs))
    if workers <= 1:
        return [fn(c, rows) for c, rows in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _moments(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    return float(x.sum()), float(np.dot(x, x)), x.size


def _moments_cols(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    return x.sum(axis=0), (x * x).sum(axis=0), x.shape[0]


def combine(stats) -> Estimate:
    s = sq = 0.0
    n = 0
    for a, b, k in stats:
        s += a
        sq += b
        n += k
    if n == 0:
        return Estimate(0.0, 0.0, 0)
    mean = float(s) / n
    var = max(sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return Estimate(mean, math.sqrt(var / n), n)
