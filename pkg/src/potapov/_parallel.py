"""Optional thread parallelism for grid evaluations.

``POTAPOV_THREADS`` caps the worker count; the default of 1 keeps everything
sequential.  Results always come back in input order.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("POTAPOV_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def grid_map(fn, items):
    items = list(items)
    workers = thread_count()
    if workers <= 1 or len(items) < 4:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
