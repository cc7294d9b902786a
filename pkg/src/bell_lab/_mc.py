"""Seeded, worker-count-invariant Monte Carlo plumbing.

Work is split into fixed-size chunks, each with its own child generator
spawned deterministically from the master seed.  Chunk results are combined
in chunk order, so running chunks on 1 or N threads produces bit-identical
aggregates.  BELL_LAB_THREADS caps the worker count (default 1).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

#: Samples per chunk; fixed so that chunk streams never depend on worker count.
CHUNK_SIZE = 1 << 15

T = TypeVar("T")


def thread_cap() -> int:
    raw = os.environ.get("BELL_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def chunk_sizes(total: int) -> list[int]:
    full, rest = divmod(total, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def chunk_generators(seed: int, n_chunks: int, stream: int = 0) -> list[np.random.Generator]:
    """Independent child generators; ``stream`` separates uses of one seed."""
    root = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return [np.random.Generator(np.random.PCG64(s)) for s in root.spawn(n_chunks)]


def map_chunks(fn: Callable[..., T], args: Sequence[tuple]) -> list[T]:
    """Apply ``fn`` to each argument tuple, preserving order; threads optional."""
    workers = min(thread_cap(), len(args))
    if workers <= 1:
        return [fn(*a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda a: fn(*a), args))


def uniform_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    """n unit vectors drawn uniformly from the 2-sphere."""
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v


def batch_means_stderr(values: np.ndarray, batches: int = 100) -> float:
    """Standard error of the mean via equal-size batch means.

    Uses the first ``batches * (n // batches)`` values; the left-over tail is
    ignored for the error estimate only.
    """
    n = values.size
    if n < 2 * batches:
        batches = max(2, n // 2)
    size = n // batches
    if size == 0:
        return float("nan")
    means = values[: batches * size].reshape(batches, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(batches))
