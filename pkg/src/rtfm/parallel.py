"""Deterministic worker-pool helper.

Every task must be a pure function of its own arguments (seeds included),
so results are merged in submission order and scheduling cannot change
the outcome.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_workers() -> int:
    env = os.environ.get("RTFM_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn, items, workers: int | None = None) -> list:
    """Map fn over items, preserving order; workers=1 runs inline."""
    items = list(items)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
