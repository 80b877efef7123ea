"""Worker pool used to spread per-instance work; results keep input order."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

_threads = 1


def set_threads(n: int) -> None:
    global _threads
    _threads = max(1, int(n))
    try:
        import numba

        numba.set_num_threads(min(_threads, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover
        pass


def get_threads() -> int:
    return _threads


def pmap(fn, items):
    items = list(items)
    if _threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(_threads, len(items))) as pool:
        return list(pool.map(fn, items))
