from __future__ import annotations

import logging
from typing import Callable, Iterable, List, TypeVar

from joblib import Parallel, delayed

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply ``func`` to every item, fanning out to ``workers`` processes when asked.

    Results come back in input order whatever the worker count.
    """

    items = list(items)
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if workers == 1 or len(items) < 2:
        return [func(item) for item in items]
    logger.debug("dispatching %d tasks to %d workers", len(items), workers)
    return Parallel(n_jobs=workers)(delayed(func)(item) for item in items)


__all__ = ["map_ordered"]
