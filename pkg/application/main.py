"""
Main CLI entry point for the growth-fragmentation verification toolkit.
"""
import sys
import argparse
from pathlib import Path
import logging

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from domain.errors import CriticalError, GrowthFragError
from domain.models.experiment import SUITES
from infrastructure.health_check import run_preflight
from infrastructure.io.spec_loader import load_config
from infrastructure.logging_config import add_error_log_file, setup_logging
from infrastructure.parallel.process_pool import replica_mapper
from application.workflows.full_pipeline import run_suites

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_SETUP = 2
EXIT_INTERRUPTED = 130


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Multitype growth-fragmentation toolkit - simulation and verification suites'
    )

    parser.add_argument(
        '--suite',
        choices=list(SUITES) + ['all'],
        default='all',
        help='Suite to run; "all" runs the suites listed in the config (default: all)'
    )

    parser.add_argument(
        '--config',
        type=Path,
        default=None,
        help='Experiment config JSON (defaults are used when omitted)'
    )

    parser.add_argument(
        '--seed',
        type=int,
        default=None,
        help='Master seed. Overrides seeds.master in the config if provided.'
    )

    parser.add_argument(
        '--workers',
        type=int,
        default=None,
        help='Worker processes for replica batches. Results do not depend on it.'
    )

    parser.add_argument(
        '--out',
        type=str,
        default=None,
        help='Output directory. Overrides output_dir in the config if provided.'
    )

    parser.add_argument(
        '--log-level',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        default='INFO',
        help='Logging level (default: INFO)'
    )
    return parser


def main(argv=None) -> int:
    """
    Run the selected suites and return the process exit code:
    0 all checks passed, 1 some check failed, 2 setup or config error,
    130 interrupted.
    """
    args = build_parser().parse_args(argv)

    log_level = getattr(logging, args.log_level)
    log_file = setup_logging(args.suite, log_level=log_level)
    add_error_log_file()
    print(f"\n📝 Logging to: {log_file}\n")
    logger = logging.getLogger(__name__)

    try:
        config = load_config(args.config, seed=args.seed, workers=args.workers, output_dir=args.out)
    except GrowthFragError as e:
        print(f"\n❌ Configuration error: {e}")
        return EXIT_SETUP

    preflight = run_preflight(config)
    if not preflight.passed:
        print("\n❌ Preflight failed:")
        for error in preflight.errors:
            print(f"  - {error}")
        return EXIT_SETUP
    for warning in preflight.warnings:
        print(f"⚠️ {warning}")

    suites = None if args.suite == 'all' else [args.suite]
    try:
        with replica_mapper(config.workers) as mapper:
            reports = run_suites(config, suites, mapper)
    except KeyboardInterrupt:
        print("\n\n⚠️ Process interrupted by user")
        return EXIT_INTERRUPTED
    except CriticalError as e:
        logger.exception("critical error")
        print(f"\n❌ Fatal error: {e}")
        return EXIT_SETUP

    # Display summary
    print("\n" + "=" * 70)
    print("VERIFICATION SUMMARY")
    print("=" * 70)
    for report in reports:
        counts = report.counts()
        mark = "✅" if report.passed else "❌"
        print(f"{mark} {report.suite:<14} " + "  ".join(f"{k}={v}" for k, v in counts.items()))
        for check in report.checks:
            if not check.passed:
                print(f"     - {check}")
    print("=" * 70)
    print(f"Results written to: {config.output_path}")

    if all(r.passed for r in reports):
        print("\n✅ All checks passed")
        return EXIT_OK
    print("\n❌ Some checks failed")
    return EXIT_FAILED_CHECKS


if __name__ == "__main__":
    sys.exit(main())
