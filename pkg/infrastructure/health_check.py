from __future__ import annotations

import logging
import shutil
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from config.settings import LOGS_DIR
from domain.errors import GrowthFragError
from domain.models.experiment import SMOKE_MINIMUM, SUITE_MINIMUMS, ExperimentConfig

logger = logging.getLogger(__name__)

MIN_FREE_DISK_MB: int = 200


@dataclass
class PreflightResult:
    """
    Output of run_preflight().

    passed:   True if no ERROR-grade checks failed.
              WARNING-grade failures do NOT set passed=False.
    warnings: Human-readable warning messages (non-blocking).
    errors:   Human-readable error messages (blocking, the run should not start).
    """
    passed: bool = True
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def add_warning(self, msg: str) -> None:
        self.warnings.append(msg)
        logger.warning("[preflight] WARNING: %s", msg)

    def add_error(self, msg: str) -> None:
        self.errors.append(msg)
        self.passed = False
        logger.error("[preflight] ERROR: %s", msg)


def _check_output_dir(result: PreflightResult, output_dir: Path) -> None:
    """ERROR if the output directory cannot be created or written."""
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        probe = output_dir / f".preflight-{uuid.uuid4().hex}"
        probe.write_text("ok", encoding="utf-8")
        probe.unlink()
        logger.debug("[preflight] Output directory writable: %s", output_dir)
    except OSError as exc:
        result.add_error(f"Output directory {output_dir} is not writable: {exc}")


def _check_logs_dir(result: PreflightResult, logs_dir: Path) -> None:
    try:
        logs_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        result.add_warning(f"Could not create logs directory {logs_dir}: {exc}")


def _check_disk_space(result: PreflightResult, output_dir: Path) -> None:
    """ERROR if less than MIN_FREE_DISK_MB MB free where results are written."""
    try:
        usage = shutil.disk_usage(output_dir if output_dir.exists() else output_dir.parent)
        free_mb = usage.free / (1024 * 1024)
        if free_mb < MIN_FREE_DISK_MB:
            result.add_error(
                f"Insufficient disk space: {free_mb:.0f} MB free, "
                f"minimum {MIN_FREE_DISK_MB} MB required."
            )
        else:
            logger.debug("[preflight] Disk space OK: %.0f MB free", free_mb)
    except OSError as exc:
        result.add_warning(f"Could not check disk space: {exc}")


def _check_spec(result: PreflightResult, config: ExperimentConfig) -> None:
    """ERROR if the spec source does not resolve to a valid MapSpec."""
    from infrastructure.io.spec_loader import load_spec

    base = Path(config.source_path).parent if config.source_path else None
    try:
        spec = load_spec(config.spec_path, base)
        logger.debug("[preflight] Spec OK: %s", spec)
    except GrowthFragError as exc:
        result.add_error(f"Spec '{config.spec_path}' rejected: {exc}")


def _check_replicas(result: PreflightResult, config: ExperimentConfig) -> None:
    """ERROR for replica counts below the profile's minimums."""
    for key, count in sorted(config.replicas.items()):
        minimum = SMOKE_MINIMUM if config.profile == "smoke" else SUITE_MINIMUMS.get(key, 1)
        if key == "pop_iterations":
            minimum = 1
        if count < minimum:
            result.add_error(f"replicas.{key}={count} is below the {config.profile} minimum {minimum}")
    if config.profile == "smoke":
        result.add_warning("smoke profile: statistical checks run below desk-scale replica counts")


def run_preflight(config: ExperimentConfig, logs_dir: Optional[Path] = None) -> PreflightResult:
    """
    Run environment and configuration checks before any suite starts.

    Returns:
        PreflightResult with passed=True if no ERROR-grade checks failed.
        Never raises.
    """
    result = PreflightResult()
    output_dir = config.output_path
    logger.info("[preflight] Running checks for output %s ...", output_dir)

    _check_output_dir(result, output_dir)
    _check_logs_dir(result, Path(logs_dir or LOGS_DIR))
    _check_disk_space(result, output_dir)
    _check_spec(result, config)
    _check_replicas(result, config)

    if result.passed:
        logger.info("[preflight] all checks passed (%d warning(s))", len(result.warnings))
    else:
        logger.error(
            "[preflight] FAILED: %d error(s), %d warning(s)",
            len(result.errors), len(result.warnings),
        )
    return result
