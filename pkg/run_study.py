#!/usr/bin/env python
"""
Study Entry Point.
Run a Monte Carlo study from a TOML file and print its summary.
"""

import argparse
import sys
import logging
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.config import settings


def main():
    parser = argparse.ArgumentParser(
        description="Run a rate / dichotomy / submodel / Hartigan study"
    )

    parser.add_argument(
        "config",
        type=str,
        help="Study TOML file"
    )

    parser.add_argument(
        "--records",
        type=str,
        default=None,
        help="Records JSONL (default: <config stem>.jsonl next to the config)"
    )

    parser.add_argument(
        "--summary",
        type=str,
        default=None,
        help="Summary CSV (default: <config stem>_summary.csv)"
    )

    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"Worker threads (default: study file, else {settings.threads})"
    )

    parser.add_argument(
        "--slope",
        type=str,
        action="append",
        default=[],
        help="Metric to fit a log-log slope for (repeatable)"
    )

    parser.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Enable verbose logging (show all details)"
    )

    args = parser.parse_args()

    from src.utils.logger import setup_logger

    logger = setup_logger("run_study", level=logging.INFO, verbose=args.verbose)

    from src.harness import ExperimentConfig, RecordStore, StudyRunner, fit_slope, summarize

    config_path = Path(args.config)
    records_path = Path(args.records) if args.records else config_path.with_suffix(".jsonl")
    summary_path = Path(args.summary) if args.summary else config_path.with_name(f"{config_path.stem}_summary.csv")

    logger.info("=" * 70)
    logger.info("                    NPMLE MONTE CARLO STUDY")
    logger.info("=" * 70)

    try:
        settings.validate()
        cfg = ExperimentConfig.from_toml(config_path)
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"❌ {e}")
        return 1

    result = StudyRunner(cfg, RecordStore(records_path), threads=args.threads).run()

    if result.records:
        summarize(result.records, path=summary_path)
    else:
        logger.warning("⚠️  No records - no summary saved")

    for metric in args.slope:
        try:
            fit = fit_slope(result.records, metric)
            logger.info(f"📈 {metric}: slope {fit.slope:.4f} [{fit.ci_low:.4f}, {fit.ci_high:.4f}]")
        except ValueError as e:
            logger.warning(f"⚠️  No slope for {metric}: {e}")

    # Print summary
    print(result.summary())

    return 0 if result.failed_cells == 0 else 2


if __name__ == "__main__":
    sys.exit(main())
