"""Order-preserving parallel map over sample points."""

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .sampling import ChartPoint, point_streams

logger = logging.getLogger(__name__)


def parallel_map[T, R](
    fn: Callable[[T], R], items: Sequence[T], threads: int = 1
) -> list[R]:
    """Apply ``fn`` to every item; results keep the input order whatever ``threads`` is."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(threads, len(items))
    logger.debug("Sweeping %d items on %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def seeded_sweep[R](
    fn: Callable[[ChartPoint, np.random.Generator], R],
    points: Sequence[ChartPoint],
    seed: int,
    threads: int = 1,
) -> list[R]:
    """Like :func:`parallel_map`, handing each point its own random stream."""
    pairs = list(zip(points, point_streams(seed, len(points)), strict=True))
    return parallel_map(lambda pair: fn(*pair), pairs, threads)
