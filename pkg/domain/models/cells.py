"""
domain/models/cells.py

Cell-system data models: Ulam-labelled cells, trees, truncation ledger,
snapshots and tagged spines.

Labels are tuples of positive integers; the Eve cell is the empty tuple.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from domain.errors import PathHorizonError
from domain.models.paths import CEMETERY, SsmpPath

Label = tuple[int, ...]

LEDGER_DISCARDED = "discarded"
LEDGER_CUT = "cut"


@dataclass(frozen=True)
class SimControls:
    """Truncation policy of the cell simulator."""
    max_generation: int = 6
    min_size: float = 1e-3
    horizon: float = float("inf")

    def __post_init__(self) -> None:
        if self.max_generation < 0:
            raise ValueError("max_generation must be >= 0")
        if not self.min_size > 0:
            raise ValueError("min_size must be > 0")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")

    def to_dict(self) -> dict:
        return {"max_generation": self.max_generation, "min_size": self.min_size, "horizon": self.horizon}

    @classmethod
    def from_dict(cls, data: dict) -> "SimControls":
        return cls(
            max_generation=int(data.get("max_generation", 6)),
            min_size=float(data.get("min_size", 1e-3)),
            horizon=float("inf") if data.get("horizon") is None else float(data["horizon"]),
        )


@dataclass
class CellRecord:
    """
    One cell u of the Ulam tree.

    birth_time    : b_u (absolute)
    initial_size  : 𝒳_u(0)
    birth_type    : 𝒥_u(0)
    path          : trajectory of the cell, relative time
    parent_size_before / parent_size_after : the parent's sizes around the
                    split that produced u (None for the Eve cell)
    """
    label: Label
    parent: Optional[Label]
    birth_time: float
    initial_size: float
    birth_type: int
    path: SsmpPath
    parent_size_before: Optional[float] = None
    parent_size_after: Optional[float] = None
    parent_type_after: Optional[int] = None

    @property
    def generation(self) -> int:
        return len(self.label)

    @property
    def lifetime(self) -> float:
        return self.path.lifetime

    @property
    def observed_until(self) -> float:
        """Absolute time up to which the cell's state is known."""
        return self.birth_time + self.path.observed_until

    def state_at(self, t: float):
        """(size, type), CEMETERY, or None when t is outside the cell's life or window."""
        rel = t - self.birth_time
        if rel < 0:
            return None
        if rel >= self.path.lifetime:
            return CEMETERY
        if rel >= self.path.observed_until:
            return None
        try:
            return self.path.query(rel)
        except PathHorizonError:
            return None


@dataclass(frozen=True)
class LedgerEntry:
    """Unsimulated weight: a discarded child or the remainder of a cut cell."""
    generation: int
    size: float
    type: int
    kind: str
    parent: Label
    time: float


@dataclass
class TruncationLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    def add(self, entry: LedgerEntry) -> None:
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[LedgerEntry]:
        return iter(self.entries)

    def remainder(self, omega: float, v: np.ndarray, upto_generation: Optional[int] = None) -> float:
        """Σ v_type·size^ω over entries with generation ≤ upto_generation."""
        terms = [
            float(v[e.type]) * e.size ** omega
            for e in self.entries
            if upto_generation is None or e.generation <= upto_generation
        ]
        return math.fsum(terms)

    def by_generation(self) -> dict[int, dict[str, int]]:
        out: dict[int, dict[str, int]] = {}
        for e in self.entries:
            slot = out.setdefault(e.generation, {LEDGER_DISCARDED: 0, LEDGER_CUT: 0})
            slot[e.kind] += 1
        return out

    def to_dict(self) -> dict:
        return {str(g): c for g, c in sorted(self.by_generation().items())}


@dataclass
class CellTree:
    root_size: float
    root_type: int
    alpha: float
    controls: SimControls
    cells: dict[Label, CellRecord] = field(default_factory=dict)
    ledger: TruncationLedger = field(default_factory=TruncationLedger)

    def eve(self) -> CellRecord:
        return self.cells[()]

    def generation(self, n: int) -> list[CellRecord]:
        return [c for c in self.cells.values() if c.generation == n]

    def children(self, label: Label) -> list[CellRecord]:
        out = []
        k = 1
        while label + (k,) in self.cells:
            out.append(self.cells[label + (k,)])
            k += 1
        return out

    def max_generation_present(self) -> int:
        return max((c.generation for c in self.cells.values()), default=0)

    def generation_profile(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for c in self.cells.values():
            counts[c.generation] = counts.get(c.generation, 0) + 1
        return dict(sorted(counts.items()))

    def __str__(self) -> str:
        return f"CellTree(x={self.root_size}, i={self.root_type}, cells={len(self.cells)}, ledger={len(self.ledger)})"


@dataclass(frozen=True)
class Particle:
    size: float
    type: int
    generation: int
    label: Label


@dataclass
class Snapshot:
    """
    The multiset of alive particles at time t, sorted by descending size.

    unresolved : cells alive at t whose state is unknown because the cell
                 was cut before t (their weight lives in the ledger)
    """
    t: float
    particles: list[Particle] = field(default_factory=list)
    unresolved: int = 0

    def sizes(self) -> np.ndarray:
        return np.array([p.size for p in self.particles], dtype=float)

    def types(self) -> np.ndarray:
        return np.array([p.type for p in self.particles], dtype=int)

    def rows(self) -> list[dict]:
        return [
            {"t": self.t, "label": ".".join(str(k) for k in p.label), "generation": p.generation, "size": p.size, "type": p.type}
            for p in self.particles
        ]


@dataclass
class TaggedSpine:
    """
    A leaf ℒ chosen proportionally to its martingale weight.

    leaf_prefix      : labels ℒ(0), ..., ℒ(n+1)
    generation_times : b_{ℒ(k)}; for a ledger pick the last entry is the
                       time the unsimulated weight was set aside
    weight           : (ℳ(n) + ledger) / (v_i x^ω), the tree's importance weight
    flagged          : the leaf fell into the unsimulated part of the tree
    cells            : stored cells along the prefix
    """
    leaf_prefix: tuple[Label, ...]
    generation_times: np.ndarray
    weight: float
    flagged: bool = False
    cells: tuple[CellRecord, ...] = ()

    @property
    def n(self) -> int:
        return len(self.leaf_prefix) - 2

    def resolved_until(self) -> float:
        """The spine at time t is determined by stored cells iff t < this value."""
        if not self.cells:
            return 0.0
        return float(self.generation_times[-1])

    def state_at(self, t: float):
        """(𝒳̂(t), Ĵ(t)), CEMETERY, or None when unresolved."""
        if t >= self.resolved_until():
            return None
        k = int(np.searchsorted(self.generation_times, t, side="right")) - 1
        return self.cells[k].state_at(t)

    def generation_at(self, t: float) -> Optional[int]:
        """n_t, the generation of the spine cell alive at t."""
        if t >= self.resolved_until():
            return None
        return int(np.searchsorted(self.generation_times, t, side="right")) - 1
