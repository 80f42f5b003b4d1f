"""
domain/models/spectral.py

Spectral data of matrix exponents and admissible (ω, v) pairs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpectralData:
    """F(z), its Perron root χ(z) and positive eigenvector w(z) with w[0] = 1."""
    z: float
    f_matrix: np.ndarray
    chi: float
    w: np.ndarray

    def residual(self) -> float:
        return float(np.max(np.abs(self.f_matrix @ self.w - self.chi * self.w)))

    def to_dict(self) -> dict:
        return {
            "z": float(self.z),
            "f_matrix": [[float(x) for x in row] for row in self.f_matrix],
            "chi": float(self.chi),
            "w": [float(x) for x in self.w],
        }


@dataclass(frozen=True)
class AdmissiblePair:
    """
    Root ω of the leading eigenvalue of the cumulant matrix A(q), with the
    eigenvector v (v[0] = 1). residual = max_i |𝒦_i(ω)|.
    """
    omega: float
    v: np.ndarray
    residual: float
    label: str = ""

    def to_dict(self) -> dict:
        return {
            "omega": float(self.omega),
            "v": [float(x) for x in self.v],
            "residual": float(self.residual),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdmissiblePair":
        return cls(
            omega=float(data["omega"]),
            v=np.array(data["v"], dtype=float),
            residual=float(data.get("residual", 0.0)),
            label=str(data.get("label", "")),
        )

    def __str__(self) -> str:
        v = ", ".join(f"{x:.6g}" for x in self.v)
        return f"AdmissiblePair(ω={self.omega:.10g}, v=({v}), residual={self.residual:.2e})"
