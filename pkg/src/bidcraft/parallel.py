"""Order-preserving thread pool capped by ``BIDCRAFT_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_cap() -> int:
    raw = os.environ.get("BIDCRAFT_THREADS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def pmap(fn, items, n_jobs: int | None = None) -> list:
    items = list(items)
    n_jobs = thread_cap() if n_jobs is None else max(1, n_jobs)
    if n_jobs == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n_jobs, len(items))) as pool:
        return list(pool.map(fn, items))
