"""Ordered parallel map over independent work items."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List


def ordered_map(fn: Callable, items: Iterable, jobs: int = 1) -> List:
    """``[fn(x) for x in items]``, optionally across ``jobs`` processes; order is preserved."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))
