"""
Worker-count resolution and an ordered map over work chunks.

Chunk sizes are always chosen by the caller from the problem size, never from
the worker count, so results do not depend on how many threads run them.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

WORKERS_ENV = "KSLAB_WORKERS"


def worker_count(default: int = 1) -> int:
    """Number of worker threads; the KSLAB_WORKERS environment variable overrides the default."""
    value = os.environ.get(WORKERS_ENV)
    if value is None or value.strip() == "":
        return max(1, default)
    try:
        return max(1, int(value))
    except ValueError:
        raise ValueError(
            "{} must be a positive integer, got {!r}".format(WORKERS_ENV, value)
        )


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int) -> list[R]:
    """Applies fn to every item, returning results in submission order."""
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def chunk_bounds(count: int, chunk: int) -> Sequence[tuple[int, int]]:
    """Splits range(count) into consecutive [start, stop) pairs of at most chunk items."""
    chunk = max(1, chunk)
    return [(start, min(start + chunk, count)) for start in range(0, count, chunk)]
