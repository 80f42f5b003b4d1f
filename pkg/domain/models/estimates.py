"""
domain/models/estimates.py

Result containers shared by the Monte Carlo checks.

CheckResult mirrors a rule verdict: every numerical assertion a suite makes
ends up as one CheckResult with a PASS / FAIL / SKIPPED / INCONCLUSIVE
verdict and the numbers behind it.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

PASS = "PASS"
FAIL = "FAIL"
SKIPPED = "SKIPPED"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with standard error."""
    estimate: float
    se: float
    n: int

    @property
    def ci_lo(self) -> float:
        return self.estimate - 1.96 * self.se

    @property
    def ci_hi(self) -> float:
        return self.estimate + 1.96 * self.se

    def within(self, target: float, multiplier: float = 3.0) -> bool:
        return abs(self.estimate - target) <= multiplier * self.se

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "se": self.se, "ci_lo": self.ci_lo, "ci_hi": self.ci_hi, "n": self.n}


@dataclass(frozen=True)
class HillEstimate:
    """Hill tail index over the top-k order statistics, with bootstrap CI."""
    estimate: float
    ci_lo: float
    ci_hi: float
    k_frac: float
    k: int
    n: int

    def contains(self, value: float) -> bool:
        return self.ci_lo <= value <= self.ci_hi

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TailReport:
    """Hill estimates across the k-fraction grid plus rank-regression slope."""
    hill: tuple[HillEstimate, ...]
    default: HillEstimate
    rank_slope: float
    n: int

    def to_dict(self) -> dict:
        return {
            "estimate": self.default.estimate,
            "ci_lo": self.default.ci_lo,
            "ci_hi": self.default.ci_hi,
            "k_frac": self.default.k_frac,
            "n": self.n,
            "rank_slope": self.rank_slope,
            "n_exceed": self.default.k,
            "sensitivity": [h.to_dict() for h in self.hill],
        }


@dataclass
class CheckResult:
    """One verdict of one suite."""
    suite: str
    name: str
    verdict: str
    detail: dict[str, Any] = field(default_factory=dict)
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict in (PASS, SKIPPED, INCONCLUSIVE)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "name": self.name,
            "verdict": self.verdict,
            "reason": self.reason,
            "detail": self.detail,
        }

    def __str__(self) -> str:
        return f"[{self.verdict}] {self.suite}/{self.name} {self.reason}".rstrip()


def verdict(flag: bool) -> str:
    return PASS if flag else FAIL
