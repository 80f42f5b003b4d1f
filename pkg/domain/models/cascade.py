"""
domain/models/cascade.py

Atomic laws for the multitype smoothing transform

    R^{(i)} = Σ_k (v_{J_k}/v_i) C_k R_k^{(J_k)}

and the multitype random affine equation

    R^{(i)} = (v_J/v_i) A R^{(J)} + B.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class OffspringAtom:
    """One outcome of the offspring law: probability and (types, weights) of the children."""
    prob: float
    child_types: tuple[int, ...]
    child_weights: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "prob": self.prob,
            "children": [[int(j), float(c)] for j, c in zip(self.child_types, self.child_weights)],
        }


@dataclass(frozen=True)
class SmoothingSpec:
    """
    Per-type atomic offspring laws.

    empirical : True when the law is a bridge from simulated trees; the
                weight matrix is then a Monte Carlo estimate with errors.
    """
    n_types: int
    laws: tuple[tuple[OffspringAtom, ...], ...]
    v: np.ndarray
    empirical: bool = False
    name: str = "smoothing"

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_types": self.n_types,
            "v": [float(x) for x in self.v],
            "empirical": self.empirical,
            "laws": [[a.to_dict() for a in law] for law in self.laws],
        }


@dataclass(frozen=True)
class AffineAtom:
    prob: float
    a: float
    b: float
    next_type: int = 0


@dataclass(frozen=True)
class AffineSpec:
    """Per-type atomic laws of (A, B, J)."""
    n_types: int
    laws: tuple[tuple[AffineAtom, ...], ...]
    v: np.ndarray = field(default_factory=lambda: np.ones(1))
    name: str = "affine"

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    def arrays(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(probs, effective multipliers (v_J/v_i)·A, B, J) for type i."""
        law = self.laws[i]
        probs = np.array([x.prob for x in law], dtype=float)
        nxt = np.array([x.next_type for x in law], dtype=int)
        mult = np.array([x.a for x in law], dtype=float) * self.v[nxt] / self.v[i]
        b = np.array([x.b for x in law], dtype=float)
        return probs, mult, b, nxt
