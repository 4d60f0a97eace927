"""Ordered parallel map over independent work items.

Results are always collected in input order, so thread count never
changes output.  The compiled chain kernels release the GIL, which is
where the threads actually help; threads=1 degrades to a plain loop.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads() -> int:
    env = os.environ.get("FLUIDCHAIN_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return 1


def parallel_map(fn, items, threads=None):
    items = list(items)
    if threads is None:
        threads = default_threads()
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
