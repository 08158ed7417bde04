# Ordered worker pool
# Fans independent tasks out to processes and returns results in submission order

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def map_ordered(func: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """Apply func to every item; results keep the order of items

    func must be a module-level callable so it can be sent to worker
    processes. With one worker (or one item) everything runs in-process.
    """
    items = list(items)
    workers = max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [func(item) for item in items]

    workers = min(workers, len(items))
    logger.debug(f"map_ordered: {len(items)} tasks on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
