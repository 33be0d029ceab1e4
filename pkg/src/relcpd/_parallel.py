"""Seed derivation and a deterministic thread-pool map.

All randomness in the package flows through :func:`derive_rng`, which keys a
counter-based Philox generator on ``(seed, *keys)``.  Work units are therefore
independent of the order (and the thread) in which they are executed.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "RELCPD_THREADS"


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return a Philox generator for the work unit identified by ``keys``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def stable_hash(*parts) -> int:
    """32-bit hash of the ``repr`` of ``parts``; stable across processes."""
    return zlib.crc32(repr(parts).encode("utf-8"))


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def pmap(func: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Map ``func`` over ``items`` preserving input order.

    Results never depend on ``threads``; only wall-clock time does.
    """
    items: Sequence[T] = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
