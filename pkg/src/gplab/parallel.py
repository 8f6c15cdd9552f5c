"""Worker-count control for slice- and case-level loops.

The GPL_THREADS environment variable caps the worker count; results are
always assembled in input order, so the thread count never changes any
output.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import UsageError


def worker_count() -> int:
    """Workers to use: GPL_THREADS if set, else the machine's CPU count."""
    raw = os.environ.get("GPL_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"GPL_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise UsageError(f"GPL_THREADS must be >= 1, got {n}")
    return n


def ordered_map(fn, items) -> list:
    """Map fn over items, possibly in threads, preserving input order."""
    items = list(items)
    workers = min(worker_count(), max(len(items), 1))
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
