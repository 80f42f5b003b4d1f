"""
domain/models/experiment.py

Batch experiment configuration, loaded from JSON and overridden by CLI flags.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from domain.models.cells import SimControls

SUITES: tuple[str, ...] = (
    "spectral",
    "simulate-map",
    "simulate-gf",
    "exponents",
    "spine-check",
    "tails",
    "empirical",
    "renewal",
    "entrance",
)

# Replica counts used when the config omits them (desk scale).
DEFAULT_REPLICAS: dict[str, int] = {
    "laplace_paths": 100_000,
    "wald_paths": 100_000,
    "dufresne_samples": 1_000_000,
    "functional_samples": 100_000,
    "scaling_paths": 10_000,
    "stopped_paths": 100_000,
    "trees": 10_000,
    "limit_trees": 100_000,
    "spine_reps": 10_000,
    "entrance_reps": 20_000,
    "pop_size": 10_000,
    "pop_iterations": 40,
    "affine_reps": 100_000,
    "pareto_samples": 100_000,
}

# Lower bounds a config must respect; below these the statistical checks are meaningless.
SUITE_MINIMUMS: dict[str, int] = {
    "laplace_paths": 1_000,
    "wald_paths": 1_000,
    "dufresne_samples": 1_000,
    "functional_samples": 10_000,
    "scaling_paths": 500,
    "stopped_paths": 1_000,
    "trees": 200,
    "limit_trees": 1_000,
    "spine_reps": 200,
    "entrance_reps": 1_000,
    "pop_size": 10_000,
    "pop_iterations": 1,
    "affine_reps": 10_000,
    "pareto_samples": 100_000,
}

SMOKE_MINIMUM = 10


@dataclass
class ExperimentConfig:
    """
    spec_path   : JSON MapSpec document, or "fixture:<name>"
    alpha       : self-similarity index used by the cell-system suites
    master_seed : root of every derived random stream
    controls    : truncation of the cell simulator
    suites      : suite names run by `all`
    replicas    : per-check replica counts (merged over DEFAULT_REPLICAS)
    tolerances  : overrides of the statistical multipliers (se_multiplier, ks_pvalue_min, tail_rel_tol)
    profile     : "desk" enforces SUITE_MINIMUMS; "smoke" only requires SMOKE_MINIMUM replicas
    """
    spec_path: str = "fixture:m2"
    alpha: float = -0.5
    master_seed: int = 20240611
    controls: SimControls = field(default_factory=SimControls)
    suites: tuple[str, ...] = SUITES
    output_dir: str = "results"
    replicas: dict[str, int] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    workers: int = 1
    x0: float = 1.0
    start_type: int = 0
    profile: str = "desk"
    source_path: Optional[str] = None

    def __post_init__(self) -> None:
        merged = dict(DEFAULT_REPLICAS)
        merged.update({k: int(v) for k, v in (self.replicas or {}).items()})
        self.replicas = merged

    def replica(self, key: str) -> int:
        return int(self.replicas[key])

    def tolerance(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec_path": self.spec_path,
            "alpha": self.alpha,
            "seeds": {"master": self.master_seed},
            "controls": self.controls.to_dict(),
            "suites": list(self.suites),
            "output_dir": self.output_dir,
            "replicas": dict(sorted(self.replicas.items())),
            "tolerances": dict(sorted(self.tolerances.items())),
            "workers": self.workers,
            "x0": self.x0,
            "start_type": self.start_type,
            "profile": self.profile,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        seeds = data.get("seeds", {}) or {}
        return cls(
            spec_path=str(data.get("spec_path", "fixture:m2")),
            alpha=float(data.get("alpha", -0.5)),
            master_seed=int(seeds.get("master", data.get("master_seed", 20240611))),
            controls=SimControls.from_dict(data.get("controls", {}) or {}),
            suites=tuple(data.get("suites", SUITES)),
            output_dir=str(data.get("output_dir", "results")),
            replicas=dict(data.get("replicas", {}) or {}),
            tolerances={k: float(v) for k, v in (data.get("tolerances", {}) or {}).items()},
            workers=int(data.get("workers", 1)),
            x0=float(data.get("x0", 1.0)),
            start_type=int(data.get("start_type", 0)),
            profile=str(data.get("profile", "desk")),
        )
