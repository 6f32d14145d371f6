# src/cli/workers.py

import logging
from concurrent.futures import ThreadPoolExecutor
from functools import partial

logger = logging.getLogger(__name__)


def map_ordered(fn, items, threads=1):
    """Apply ``fn`` to every item and return results in input order.

    Every replica derives its randomness from (seed, stream_id), so the thread
    count never changes the output.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("Dispatching %d jobs on %d threads", len(items), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def mapper(threads):
    """``map_fn(fn, items)`` callable bound to a thread count."""
    return partial(map_ordered, threads=threads)
