"""Deterministic map over independent path jobs.

Results are keyed by job index and merged in index order, so the output is
byte-identical no matter how many workers run.  The GERM_THREADS
environment variable caps the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")


def worker_count(requested: int | None = None) -> int:
    """Effective worker count: explicit request, else GERM_THREADS, else 1."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("GERM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"GERM_THREADS must be an integer, got {env!r}") from None
    return 1


def map_indexed(fn: Callable[[int], T], n: int, workers: int | None = None) -> list[T]:
    """[fn(0), ..., fn(n-1)] in index order, optionally on a thread pool."""
    count = worker_count(workers)
    if count == 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(fn, range(n)))
