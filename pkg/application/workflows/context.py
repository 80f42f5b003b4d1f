"""
application/workflows/context.py

Shared state of one suite run: config, spec, the suite's random stream,
the replica mapper, and the checks and artifacts it produces.
"""
from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Sequence

from config.settings import KS_PVALUE_MIN, MIN_TAIL_VERIFY_SAMPLES, SE_MULTIPLIER, TAIL_REL_TOL
from domain.errors import CriticalError, GrowthFragError, InsufficientSamplesError
from domain.models.estimates import FAIL, INCONCLUSIVE, PASS, SKIPPED, CheckResult, verdict
from domain.models.experiment import SMOKE_MINIMUM, ExperimentConfig
from domain.models.map_spec import MapSpec
from domain.models.spectral import AdmissiblePair
from domain.services.cumulants import AdmissibleRoots, admissible_roots
from domain.services.rng_streams import Mapper, SeededStream
from infrastructure.io.csv_exporter import write_rows_csv
from infrastructure.io.json_writer import write_json

logger = logging.getLogger(__name__)


@dataclass
class SuiteReport:
    suite: str
    checks: list[CheckResult] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def counts(self) -> dict[str, int]:
        out = {PASS: 0, FAIL: 0, SKIPPED: 0, INCONCLUSIVE: 0}
        for c in self.checks:
            out[c.verdict] = out.get(c.verdict, 0) + 1
        return out

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "counts": self.counts(),
            "checks": [c.to_dict() for c in self.checks],
            "artifacts": sorted(self.artifacts),
        }


@dataclass
class SuiteContext:
    suite: str
    config: ExperimentConfig
    spec: MapSpec
    stream: SeededStream
    mapper: Optional[Mapper] = None
    report: SuiteReport = field(init=False)
    _roots: Optional[AdmissibleRoots] = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        self.report = SuiteReport(self.suite)

    # ── configuration shortcuts ──────────────────────────────────────────────

    @property
    def out_dir(self) -> Path:
        return self.config.output_path / self.suite

    @property
    def controls(self):
        return self.config.controls

    @property
    def se_multiplier(self) -> float:
        return self.config.tolerance("se_multiplier", SE_MULTIPLIER)

    @property
    def ks_pvalue_min(self) -> float:
        return self.config.tolerance("ks_pvalue_min", KS_PVALUE_MIN)

    @property
    def tail_rel_tol(self) -> float:
        return self.config.tolerance("tail_rel_tol", TAIL_REL_TOL)

    @property
    def tail_min_samples(self) -> int:
        return SMOKE_MINIMUM if self.config.profile == "smoke" else MIN_TAIL_VERIFY_SAMPLES

    def reps(self, key: str) -> int:
        return self.config.replica(key)

    def roots(self) -> AdmissibleRoots:
        """Admissible pairs of the configured spec, computed once per suite."""
        if self._roots is None:
            self._roots = admissible_roots(self.spec)
        return self._roots

    def pair_minus(self) -> AdmissiblePair:
        return self.roots().lower

    def pair_plus(self) -> Optional[AdmissiblePair]:
        return self.roots().upper

    # ── checks ───────────────────────────────────────────────────────────────

    def record(self, name: str, outcome: bool | str, reason: str = "", **detail: Any) -> CheckResult:
        result = CheckResult(
            suite=self.suite,
            name=name,
            verdict=outcome if isinstance(outcome, str) else verdict(outcome),
            detail=detail,
            reason=reason,
        )
        self.report.checks.append(result)
        log = logger.info if result.passed else logger.warning
        log("%s", result)
        return result

    def skip(self, name: str, reason: str, **detail: Any) -> CheckResult:
        return self.record(name, SKIPPED, reason, **detail)

    @contextmanager
    def guard(self, name: str) -> Iterator[None]:
        """
        Turn a domain error inside the block into a check: SKIPPED for too few
        samples, FAIL otherwise. Critical errors propagate.
        """
        try:
            yield
        except CriticalError:
            raise
        except InsufficientSamplesError as exc:
            self.skip(name, str(exc))
        except GrowthFragError as exc:
            logger.error("%s/%s failed: %s", self.suite, name, exc)
            self.record(name, FAIL, f"{type(exc).__name__}: {exc}")

    # ── artifacts ────────────────────────────────────────────────────────────

    def write_csv(self, name: str, rows: Iterable[dict], columns: Optional[Sequence[str]] = None) -> Path:
        path = write_rows_csv(rows, self.out_dir / name, columns)
        self.report.artifacts.append(f"{self.suite}/{name}")
        return path

    def write_json(self, name: str, data: Any) -> Path:
        path = write_json(data, self.out_dir / name)
        self.report.artifacts.append(f"{self.suite}/{name}")
        return path

    def plot_path(self, name: str) -> Path:
        self.report.artifacts.append(f"{self.suite}/{name}")
        return self.out_dir / name
