"""application/workflows/full_pipeline.py

Runs a sequence of verification suites and writes the batch summary:
summary.json (config plus per-suite reports) and checks.csv (one row per check).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from domain.models.experiment import ExperimentConfig
from domain.services.rng_streams import Mapper, SeededStream
from application.workflows.context import SuiteContext, SuiteReport
from application.workflows.suite_empirical import run_empirical_suite
from application.workflows.suite_entrance import run_entrance_suite
from application.workflows.suite_exponents import run_exponents_suite
from application.workflows.suite_renewal import run_renewal_suite
from application.workflows.suite_simulate_gf import run_simulate_gf_suite
from application.workflows.suite_simulate_map import run_simulate_map_suite
from application.workflows.suite_spectral import run_spectral_suite
from application.workflows.suite_spine_check import run_spine_check_suite
from application.workflows.suite_tails import run_tails_suite
from infrastructure.io.csv_exporter import write_checks_csv
from infrastructure.io.json_writer import write_json
from infrastructure.io.spec_loader import load_config, load_spec

logger = logging.getLogger(__name__)

SUITE_RUNNERS: dict[str, Callable[[SuiteContext], None]] = {
    "spectral": run_spectral_suite,
    "simulate-map": run_simulate_map_suite,
    "simulate-gf": run_simulate_gf_suite,
    "exponents": run_exponents_suite,
    "spine-check": run_spine_check_suite,
    "tails": run_tails_suite,
    "empirical": run_empirical_suite,
    "renewal": run_renewal_suite,
    "entrance": run_entrance_suite,
}


def run_suite(name: str, config: ExperimentConfig, mapper: Optional[Mapper] = None) -> SuiteReport:
    """One suite on its own stream SeededStream(master).spawn(name)."""
    spec = load_spec(config.spec_path, Path(config.source_path).parent if config.source_path else None)
    ctx = SuiteContext(suite=name, config=config, spec=spec, stream=SeededStream(config.master_seed).spawn(name), mapper=mapper)
    logger.info("[%s] starting on %s", name, spec.name)
    SUITE_RUNNERS[name](ctx)
    counts = ctx.report.counts()
    logger.info("[%s] done: %s", name, ", ".join(f"{k}={v}" for k, v in counts.items()))
    return ctx.report


def run_suites(config: ExperimentConfig, suites: Optional[Sequence[str]] = None, mapper: Optional[Mapper] = None) -> list[SuiteReport]:
    """
    Run the suites in the given order (config.suites by default) and write
    summary.json and checks.csv under config.output_dir. Partial artifacts
    of a failed suite are kept.
    """
    names = list(suites or config.suites)
    reports = [run_suite(name, config, mapper) for name in names]

    out = config.output_path
    write_json({"config": config.to_dict(), "passed": all(r.passed for r in reports), "suites": reports}, out / "summary.json")
    write_checks_csv([c.to_dict() for r in reports for c in r.checks], out / "checks.csv")
    return reports


def _build_cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Run verification suites in-process, without preflight")
    parser.add_argument("--config", type=Path, default=None, help="Experiment config JSON")
    parser.add_argument("--suite", action="append", default=None, help="Suite to run (repeatable)")
    return parser


if __name__ == "__main__":
    args = _build_cli().parse_args()
    run_suites(load_config(args.config), args.suite)
