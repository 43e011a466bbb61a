"""Ordered parallel map with a worker cap taken from ``CQREL_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """``CQREL_THREADS`` if set and positive, else the CPU count (0 means auto)."""
    raw = os.environ.get("CQREL_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Results come back in input order regardless of scheduling."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
