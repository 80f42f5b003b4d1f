"""
domain/services/rng_streams.py

Counter-based random streams keyed by (master_seed, key path).

Every replica, tree and cell draws from its own Philox generator whose
SeedSequence spawn key is the tuple of integer keys leading to it. The
numbers a replica sees therefore depend only on its key path, never on the
order in which replicas are executed or on the worker count.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

Mapper = Callable[[Callable, Iterable], Iterable]

SUITE_TAGS: dict[str, int] = {
    "spectral": 1,
    "simulate-map": 2,
    "simulate-gf": 3,
    "exponents": 4,
    "spine-check": 5,
    "tails": 6,
    "empirical": 7,
    "renewal": 8,
    "entrance": 9,
}


def tag(name: str) -> int:
    """Stable integer key for a free-form name."""
    if name in SUITE_TAGS:
        return SUITE_TAGS[name]
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass(frozen=True)
class SeededStream:
    master_seed: int
    keys: tuple[int, ...] = ()

    def spawn(self, *keys: int | str) -> "SeededStream":
        extra = tuple(tag(k) if isinstance(k, str) else int(k) for k in keys)
        return SeededStream(self.master_seed, self.keys + extra)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=self.keys)
        return np.random.Generator(np.random.Philox(seq))

    def tie_breaker(self, *keys: int) -> int:
        """Deterministic 64-bit hash used to break exact ties."""
        payload = ",".join(str(k) for k in (self.master_seed,) + self.keys + tuple(keys))
        return int.from_bytes(hashlib.sha256(payload.encode("ascii")).digest()[:8], "little")


def as_stream(rng: SeededStream | int) -> SeededStream:
    if isinstance(rng, SeededStream):
        return rng
    return SeededStream(int(rng))


def run_replicas(
    task: Callable[[SeededStream], T],
    n: int,
    stream: SeededStream,
    mapper: Optional[Mapper] = None,
) -> list[T]:
    """
    Run task(stream.spawn(k)) for k = 0..n−1 and return results in replica order.

    `mapper` has the signature of the builtin map; a process-pool mapper
    can be injected by the application layer. `task` must be picklable
    when the mapper crosses process boundaries.
    """
    streams = [stream.spawn(k) for k in range(int(n))]
    run = mapper or map
    return list(run(task, streams))


def mean_se(values: Sequence[float] | np.ndarray) -> tuple[float, float]:
    """Order-insensitive mean and standard error (exactly rounded sums)."""
    arr = np.asarray(values, dtype=float)
    n = arr.size
    if n == 0:
        return float("nan"), float("nan")
    mean = math.fsum(arr.tolist()) / n
    if n == 1:
        return mean, float("inf")
    var = math.fsum(((arr - mean) ** 2).tolist()) / (n - 1)
    return mean, math.sqrt(var / n)


def weighted_mean_se(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Mean of values·weights per replica, i.e. an importance-sampling average."""
    return mean_se(np.asarray(values, dtype=float) * np.asarray(weights, dtype=float))
