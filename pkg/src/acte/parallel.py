"""Thread-pool helper honoring the ACTE_THREADS cap.

Work items always carry their own pre-derived RNG streams, so parallel and
serial execution produce identical results; the pool only changes wall time.
Nested calls (a forest fit inside a bootstrap replicate) run serially to
avoid oversubscription.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor

_local = threading.local()


def max_workers() -> int:
    """Parallelism cap: min(cpu count, ACTE_THREADS); 1 inside a worker."""
    if getattr(_local, "in_worker", False):
        return 1
    cap = os.cpu_count() or 1
    env = os.environ.get("ACTE_THREADS")
    if env:
        try:
            cap = min(cap, max(1, int(env)))
        except ValueError:
            pass
    return cap


def thread_map(fn, items, workers: int | None = None) -> list:
    """Map preserving order, threaded when more than one worker is allowed."""
    items = list(items)
    if workers is None:
        workers = max_workers()
    workers = min(workers, len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]

    def run(item):
        _local.in_worker = True
        try:
            return fn(item)
        finally:
            _local.in_worker = False

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, items))
