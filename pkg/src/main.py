"""
Command-line entry point for the lattice martingale lab.

    python -m src.main run --config config/experiments/c0_block_martingale.json --out results
    python -m src.main run --fixture polya_urn --seed 7
    python -m src.main validate --config my_experiment.json
    python -m src.main list-fixtures

Exit codes: 0 when every verdict matches its expectation, 1 on a verdict
mismatch, 2 on a configuration error (the offending field is printed).
"""

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import pandas as pd

from src.agents.martingale_lab import MartingaleLab, RunResult
from src.agents.report_writer import ReportWriter
from src.utils.config_parser import ExperimentConfig, load_experiment_config
from src.utils.errors import ConfigError, LabError
from src.utils.fixtures import FixtureGallery

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Run uo-convergence and martingale experiments on finite vector lattices",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--list-fixtures", action="store_true", help="Print the fixture gallery and exit")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    subparsers = parser.add_subparsers(dest="command")

    run = subparsers.add_parser("run", help="Run experiments and write reports")
    run.add_argument("--config", action="append", default=[], help="Experiment config (repeatable)")
    run.add_argument("--fixture", action="append", default=[], help="Run a gallery fixture (repeatable)")
    run.add_argument("--out", type=str, default=None, help="Output directory (default: results)")
    run.add_argument("--seed", type=int, default=None, help="Seed override")
    run.add_argument("--tolerance", type=float, default=None, help="Numeric tolerance override (>= 0)")
    run.add_argument("--horizon", type=int, default=None, help="Horizon override (>= 2)")
    run.add_argument("--workers", type=int, default=4, help="Concurrent experiments")
    run.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                     help="Only log warnings and errors")

    validate = subparsers.add_parser("validate", help="Check configs without running them")
    validate.add_argument("--config", action="append", default=[], help="Experiment config (repeatable)")

    subparsers.add_parser("list-fixtures", help="Print the fixture gallery")
    return parser.parse_args(argv)


def _configure_logging(quiet: bool) -> None:
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stdout)],
        force=True,
    )


def list_fixtures(gallery: FixtureGallery) -> int:
    print("🧪 Fixture gallery")
    for entry in gallery.describe():
        print(f"  {entry['name']:<28} {entry['description']}")
    return EXIT_OK


def _load_configs(args: argparse.Namespace, gallery: FixtureGallery) -> List[ExperimentConfig]:
    configs = [load_experiment_config(path) for path in args.config]
    configs += [gallery.config(name) for name in getattr(args, "fixture", [])]
    if not configs:
        raise ConfigError("give at least one --config or --fixture", "--config")
    names = [c.name for c in configs]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ConfigError(f"experiment names must be unique, repeated: {duplicates}", "name")
    return configs


def validate_configs(args: argparse.Namespace, gallery: FixtureGallery) -> int:
    for config in _load_configs(args, gallery):
        gallery.resolve(config)
        print(f"✅ {config.name}: config is valid")
    return EXIT_OK


def run_experiments(args: argparse.Namespace, gallery: FixtureGallery) -> int:
    if args.horizon is not None and args.horizon < 2:
        raise ConfigError("horizon must be >= 2", "--horizon")
    configs = _load_configs(args, gallery)
    lab = MartingaleLab(seed=args.seed, tolerance=args.tolerance, horizon=args.horizon, gallery=gallery)

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results: List[RunResult] = list(pool.map(lab.run, configs))

    # writing is serialized and ordered by name, independent of scheduling
    results.sort(key=lambda r: r.report.name)
    out_dir = args.out or next((c.output_dir for c in configs if c.output_dir), None) or "results"
    writer = ReportWriter(out_dir)
    for result in results:
        writer.write(result)
    writer.write_summary(results)

    if not args.quiet:
        table = pd.DataFrame([{
            "experiment": r.report.name,
            "passed": f"{sum(r.report.verdicts.values())}/{len(r.report.verdicts)}",
            "expectations": "ok" if r.ok else "MISMATCH",
        } for r in results])
        print(table.to_string(index=False))

    failed = [r for r in results if not r.ok]
    for result in failed:
        for mismatch in result.mismatches:
            print(f"❌ {result.report.name}: {mismatch}")
    return EXIT_MISMATCH if failed else EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_arguments(argv)
    _configure_logging(args.quiet)
    gallery = FixtureGallery()
    try:
        if args.list_fixtures or args.command == "list-fixtures":
            return list_fixtures(gallery)
        if args.command == "validate":
            return validate_configs(args, gallery)
        if args.command == "run":
            return run_experiments(args, gallery)
        print("Usage: python -m src.main {run,validate,list-fixtures} --help")
        return EXIT_CONFIG
    except ConfigError as e:
        print(f"❌ config error: {e}")
        return EXIT_CONFIG
    except LabError as e:
        print(f"❌ malformed experiment input: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
