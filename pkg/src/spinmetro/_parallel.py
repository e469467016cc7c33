from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "SPINMETRO_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None


def parallel_map(fn, items, threads: int | None = None) -> list:
    """Ordered map; results never depend on the number of workers."""
    items = list(items)
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
