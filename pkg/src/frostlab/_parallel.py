"""Process-wide thread count for the kernels and frame loops.

Every parallel code path reduces its partial results in a fixed order,
so results do not depend on the value set here.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

_threads = max(1, int(os.environ.get("FROSTLAB_THREADS", "1")))


def get_threads():
    return _threads


def set_threads(n):
    global _threads
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = n


@contextmanager
def threads(n):
    """Temporarily run with ``n`` threads."""
    old = _threads
    set_threads(n)
    try:
        yield
    finally:
        set_threads(old)


def ordered_map(func, items):
    """``list(map(func, items))``, spread over the configured threads.

    Output order always follows input order.
    """
    items = list(items)
    if _threads == 1 or len(items) < 2:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=_threads) as pool:
        return list(pool.map(func, items))
