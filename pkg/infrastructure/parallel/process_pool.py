"""
infrastructure/parallel/process_pool.py

Replica mapper backed by concurrent.futures.ProcessPoolExecutor.

The mapper has the signature of the builtin map and returns results in
input order, so reductions over replicas see the same sequence for any
worker count.
"""
from __future__ import annotations

import concurrent.futures as cf
import logging
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, Optional

logger = logging.getLogger(__name__)

# Replicas handed to a worker per round trip.
DEFAULT_CHUNKSIZE = 64


class ProcessPoolMapper:
    """Callable `map(task, items)` over a shared process pool."""

    def __init__(self, workers: int, chunksize: int = DEFAULT_CHUNKSIZE):
        if workers < 2:
            raise ValueError("ProcessPoolMapper needs at least 2 workers")
        self.workers = int(workers)
        self.chunksize = int(chunksize)
        self._executor: Optional[cf.ProcessPoolExecutor] = None

    def __enter__(self) -> "ProcessPoolMapper":
        self._executor = cf.ProcessPoolExecutor(max_workers=self.workers)
        logger.debug("Process pool started with %d workers", self.workers)
        return self

    def __exit__(self, *exc) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=True)
            self._executor = None

    def __call__(self, task: Callable, items: Iterable) -> list:
        if self._executor is None:
            raise RuntimeError("ProcessPoolMapper used outside its context")
        items = list(items)
        chunksize = max(1, min(self.chunksize, len(items) // (4 * self.workers) or 1))
        return list(self._executor.map(task, items, chunksize=chunksize))


@contextmanager
def replica_mapper(workers: int) -> Iterator[Optional[Callable]]:
    """Yield None (sequential map) for one worker, a process-pool mapper otherwise."""
    if workers <= 1:
        yield None
        return
    with ProcessPoolMapper(workers) as mapper:
        yield mapper
