"""Bounded, order-preserving parallel map.

Worker count is capped by the FACIES_QC_THREADS environment variable
(default 1, i.e. serial). Results are always aggregated in input order, so
outputs are identical regardless of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["max_workers", "map_ordered"]


def max_workers() -> int:
    raw = os.environ.get("FACIES_QC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"FACIES_QC_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def map_ordered(fn, items) -> list:
    items = list(items)
    workers = min(max_workers(), len(items)) if items else 1
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
