"""Thread-pool map honoring the REEB_GROWTH_THREADS cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "REEB_GROWTH_THREADS"


def thread_cap(requested: int | None = None) -> int:
    cap = os.environ.get(ENV_VAR)
    n = requested if requested is not None else 1
    if cap:
        try:
            n = min(n, max(1, int(cap))) if requested is not None else max(1, int(cap))
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be a positive integer, got {cap!r}") from None
    return max(1, n)


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Order-preserving map; runs serially unless more than one worker is allowed."""
    items = list(items)
    n = thread_cap(workers)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
