"""Worker pool helpers.

Trials are pure functions of their index, so an ordered map over indices
gives identical output for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

WORKERS_ENV = "KASHINSPLIT_WORKERS"


def worker_count(explicit: int | None = None) -> int:
    if explicit is not None:
        return max(1, int(explicit))
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    return max(1, int(raw))


def ordered_map(fn, items, workers: int = 1) -> list:
    """Map preserving input order; results do not depend on `workers`."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
