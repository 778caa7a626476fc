"""Reproducible Monte Carlo over disjoint random substreams.

Work is cut into fixed-size chunks, chunk ``i`` always draws from child ``i``
of the master :class:`numpy.random.SeedSequence`, and chunk results are reduced
in index order. The answer therefore depends on the master seed and the chunk
size only, never on how many workers ran the chunks.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_CHUNK = 65536


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(seed))


def chunk_sizes(total: int, chunk: int = DEFAULT_CHUNK) -> list[int]:
    if total < 1:
        raise ValueError("sample count must be positive")
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(fn: Callable[[np.random.Generator, int], T], total: int, seed: int,
               chunk: int = DEFAULT_CHUNK, workers: int = 1) -> list[T]:
    """Evaluate ``fn(rng_i, size_i)`` for every chunk; results come back in chunk order."""
    sizes = chunk_sizes(total, chunk)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(np.random.default_rng(c), s) for c, s in zip(children, sizes)]
    if workers <= 1:
        return [fn(g, s) for g, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
