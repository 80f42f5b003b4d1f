"""
domain/models/paths.py

Sampled trajectories.

MapPath stores (ξ, Θ) on a knot grid. Between two consecutive knots ξ is
linear: the drift increment plus the Gaussian increment of that segment.
At a knot ξ jumps from left_values[k] to right_values[k]. Knots are jump
times, Gaussian grid points and the final time.

SsmpPath is the Lamperti image X(t) = x0·exp(ξ(φ(t·x0^{-α}))) of a MapPath,
with the additive clock A(s) = ∫_0^s e^{αξ(u)} du tabulated at the knots.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from domain.errors import PathHorizonError

KIND_NONE = 0
KIND_LEVY = 1
KIND_TRANSITION = 2


class _Cemetery:
    """The absorbing state ∂ reached after killing."""

    _instance: Optional["_Cemetery"] = None

    def __new__(cls) -> "_Cemetery":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "CEMETERY"

    def __reduce__(self):
        return (_Cemetery, ())


CEMETERY = _Cemetery()


def interleave_values(start: float, seg_inc: np.ndarray, jumps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Rebuild left/right knot values from increments.

    The values are a single left-to-right cumulative sum of
    [start, seg_1, jump_1, seg_2, jump_2, ...]. Storing paths through this
    one routine makes the end-value identity exact in floating point.
    """
    k = len(seg_inc)
    z = np.empty(2 * k + 1, dtype=float)
    z[0] = start
    z[1::2] = seg_inc
    z[2::2] = jumps
    cs = np.cumsum(z)
    left = np.empty(k + 1, dtype=float)
    right = np.empty(k + 1, dtype=float)
    left[0] = right[0] = start
    left[1:] = cs[1::2]
    right[1:] = cs[2::2]
    return left, right


@dataclass
class MapPath:
    """
    Knot representation of one MAP trajectory on [0, horizon].

    knot_times    : (K+1,) strictly increasing, knot_times[0] = 0
    left_values   : ξ(t_k−)
    right_values  : ξ(t_k)
    types         : Θ on [t_k, t_{k+1})
    knot_jumps    : jump size at knot k (0 for grid points and the end knot)
    knot_marks    : type mark of the jump at knot k (−1 if none)
    knot_kinds    : KIND_NONE / KIND_LEVY / KIND_TRANSITION
    drift_inc     : (K,) drift part of the increment on (t_{k-1}, t_k)
    gauss_inc     : (K,) Gaussian part of the increment on (t_{k-1}, t_k)
    """
    knot_times: np.ndarray
    left_values: np.ndarray
    right_values: np.ndarray
    types: np.ndarray
    knot_jumps: np.ndarray
    knot_marks: np.ndarray
    knot_kinds: np.ndarray
    drift_inc: np.ndarray
    gauss_inc: np.ndarray
    horizon: float
    killed_at: Optional[float] = None

    @property
    def start_value(self) -> float:
        return float(self.right_values[0])

    @property
    def start_type(self) -> int:
        return int(self.types[0])

    @property
    def end_value(self) -> float:
        return float(self.right_values[-1])

    @property
    def end_type(self) -> int:
        return int(self.types[-1])

    @property
    def end_time(self) -> float:
        return float(self.knot_times[-1])

    @property
    def killed(self) -> bool:
        return self.killed_at is not None

    @property
    def n_segments(self) -> int:
        return len(self.knot_times) - 1

    def jump_mask(self) -> np.ndarray:
        return self.knot_kinds != KIND_NONE

    def jumps(self) -> dict[str, np.ndarray]:
        """Jump records: time, size, type_mark, kind, type_after."""
        mask = self.jump_mask()
        return {
            "time": self.knot_times[mask],
            "size": self.knot_jumps[mask],
            "type_mark": self.knot_marks[mask],
            "kind": self.knot_kinds[mask],
            "type_after": self.types[mask],
        }

    def reconstruct_end_value(self) -> float:
        _, right = interleave_values(self.start_value, self.drift_inc + self.gauss_inc, self.knot_jumps[1:])
        return float(right[-1])

    def value_at(self, s: float) -> tuple[float, int]:
        """(ξ(s), Θ(s)) for 0 ≤ s ≤ end_time."""
        if s < 0 or s > self.end_time:
            raise PathHorizonError(f"time {s} outside [0, {self.end_time}]")
        k = int(np.searchsorted(self.knot_times, s, side="right")) - 1
        if k >= self.n_segments:
            return float(self.right_values[-1]), int(self.types[-1])
        t0, t1 = self.knot_times[k], self.knot_times[k + 1]
        frac = (s - t0) / (t1 - t0)
        return float(self.right_values[k] + frac * (self.left_values[k + 1] - self.right_values[k])), int(self.types[k])


def concatenate_paths(chunks: Sequence[MapPath]) -> MapPath:
    """Join consecutive chunk paths (each starting where the previous ended)."""
    if len(chunks) == 1:
        return chunks[0]
    times, types, jumps, marks, kinds, drift, gauss = [], [], [], [], [], [], []
    offset = 0.0
    for n, c in enumerate(chunks):
        sl = slice(0 if n == 0 else 1, None)
        times.append(c.knot_times[sl] + offset)
        types.append(c.types[sl])
        jumps.append(c.knot_jumps[sl])
        marks.append(c.knot_marks[sl])
        kinds.append(c.knot_kinds[sl])
        drift.append(c.drift_inc)
        gauss.append(c.gauss_inc)
        offset += c.end_time
    knot_jumps = np.concatenate(jumps)
    drift_inc = np.concatenate(drift)
    gauss_inc = np.concatenate(gauss)
    left, right = interleave_values(chunks[0].start_value, drift_inc + gauss_inc, knot_jumps[1:])
    last = chunks[-1]
    killed_at = offset if last.killed else None
    return MapPath(
        knot_times=np.concatenate(times),
        left_values=left,
        right_values=right,
        types=np.concatenate(types),
        knot_jumps=knot_jumps,
        knot_marks=np.concatenate(marks),
        knot_kinds=np.concatenate(kinds),
        drift_inc=drift_inc,
        gauss_inc=gauss_inc,
        horizon=offset,
        killed_at=killed_at,
    )


def truncate_path(path: MapPath, knot_index: int) -> MapPath:
    """Keep knots 0..knot_index; the path is then observed up to that knot."""
    k = int(knot_index)
    sl = slice(0, k + 1)
    return MapPath(
        knot_times=path.knot_times[sl].copy(),
        left_values=path.left_values[sl].copy(),
        right_values=path.right_values[sl].copy(),
        types=path.types[sl].copy(),
        knot_jumps=path.knot_jumps[sl].copy(),
        knot_marks=path.knot_marks[sl].copy(),
        knot_kinds=path.knot_kinds[sl].copy(),
        drift_inc=path.drift_inc[:k].copy(),
        gauss_inc=path.gauss_inc[:k].copy(),
        horizon=float(path.knot_times[k]),
        killed_at=None,
    )


@dataclass
class SsmpPath:
    """
    Self-similar Markov process with types, as the Lamperti image of `base`.

    clock          : A(t_k) = ∫_0^{t_k} e^{αξ(u)} du at the knots of `base`
    observed_until : x0^α·A(end), the real time covered by the stored path
    lifetime       : ζ; finite only when the base path was killed
    stop_reason    : "horizon", "killed" or "floor"
    """
    base: MapPath
    x0: float
    alpha: float
    clock: np.ndarray
    stop_reason: str = "horizon"
    lifetime: float = float("inf")
    _scale: float = field(init=False, repr=False, default=1.0)

    def __post_init__(self) -> None:
        self._scale = float(self.x0 ** self.alpha)
        if self.base.killed:
            self.lifetime = self.observed_until
            self.stop_reason = "killed"

    @property
    def observed_until(self) -> float:
        return float(self._scale * self.clock[-1])

    @property
    def end_size(self) -> float:
        return float(self.x0 * np.exp(self.base.end_value))

    @property
    def end_type(self) -> int:
        return self.base.end_type

    def knot_real_times(self) -> np.ndarray:
        return self._scale * self.clock

    def internal_time(self, t: float) -> float:
        """φ(t·x0^{-α}): the MAP time reached after real time t."""
        base = self.base
        if base.n_segments == 0:
            return 0.0
        target = t / self._scale
        k = int(np.searchsorted(self.clock, target, side="right")) - 1
        k = min(max(k, 0), base.n_segments - 1)
        t0, t1 = base.knot_times[k], base.knot_times[k + 1]
        dur = t1 - t0
        r = base.right_values[k]
        slope = (base.left_values[k + 1] - r) / dur
        y = self.alpha * slope
        excess = max(target - self.clock[k], 0.0)
        scaled = excess * np.exp(-self.alpha * r)
        if abs(y * dur) < 1e-12:
            tau = scaled
        else:
            tau = np.log1p(scaled * y) / y
        return float(t0 + min(max(tau, 0.0), dur))

    def query(self, t: float):
        """(X(t), J(t)); CEMETERY at or after the lifetime."""
        if t < 0:
            raise PathHorizonError(f"negative time {t}")
        if t >= self.lifetime:
            return CEMETERY
        if t >= self.observed_until and not (t == 0.0 and self.observed_until == 0.0):
            raise PathHorizonError(f"time {t} beyond observed window {self.observed_until}")
        s = self.internal_time(t)
        value, j = self.base.value_at(s)
        return float(self.x0 * np.exp(value)), j

    def covers(self, t: float) -> bool:
        return t < self.observed_until or t >= self.lifetime

    def jump_records(self) -> dict[str, np.ndarray]:
        """Jumps of X: real time, ΔX, size before, mark, kind, type after."""
        base = self.base
        mask = base.jump_mask()
        before = self.x0 * np.exp(base.left_values[mask])
        after = self.x0 * np.exp(base.right_values[mask])
        return {
            "time": self._scale * self.clock[mask],
            "delta": after - before,
            "size_before": before,
            "type_mark": base.knot_marks[mask],
            "kind": base.knot_kinds[mask],
            "type_after": base.types[mask],
        }


TAIL_BOUND_EXACT = "exact"
TAIL_BOUND_MEAN = "conditional-mean"
TAIL_BOUND_HEURISTIC = "heuristic"


@dataclass(frozen=True)
class ExpFunctionalSample:
    """
    One draw of a (possibly type-weighted) exponential functional.

    bound_kind : "exact" when the path was killed, "conditional-mean" when
                 tail_bound bounds the mean of the neglected tail, and
                 "heuristic" when χ(α) ≥ 0 leaves only a fractional-moment scale
    """
    value: float
    truncation_time: float
    tail_bound: float
    weighted: bool = False
    start_type: int = 0
    weight: float = 1.0
    bound_kind: str = TAIL_BOUND_MEAN

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "weight": self.weight,
            "start_type": self.start_type,
            "truncation_time": self.truncation_time,
            "tail_bound": self.tail_bound,
            "bound_kind": self.bound_kind,
        }
