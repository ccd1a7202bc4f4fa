"""Deterministic random streams and the thread-pool helper built on them.

Every random draw in the package comes from a :class:`SeededRng`, a value
object naming a master seed and a stream path. Work that is split into
chunks derives one child stream per chunk index, so the output never depends
on how many threads processed the chunks.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "HYPERVSA_THREADS"
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeededRng:
    """A master seed plus a stream path; cheap to copy and safe to share."""

    seed: int
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if any(not 0 <= s <= _MASK64 for s in self.stream):
            raise ValueError("stream indices must be 64-bit unsigned integers")

    def child(self, index: int) -> SeededRng:
        return SeededRng(self.seed, self.stream + (int(index),))

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng: SeededRng | int | None) -> SeededRng:
    if rng is None:
        return SeededRng(0)
    if isinstance(rng, SeededRng):
        return rng
    if isinstance(rng, (int, np.integer)):
        return SeededRng(int(rng))
    raise TypeError(f"expected SeededRng or int seed, got {type(rng).__name__}")


def resolve_threads(threads: int | None = None) -> int:
    """Thread count: the environment override wins, then the argument, then 1."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    else:
        value = 1 if threads is None else int(threads)
    return max(1, value)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Ordered map; runs on a thread pool when more than one thread is allowed.

    Results are returned in input order, so callers that reduce them in order
    get identical output for any thread count.
    """
    items = list(items)
    n = min(resolve_threads(threads), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def chunk_bounds(total: int, size: int) -> Sequence[tuple[int, int]]:
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]
