#!/usr/bin/env python
"""Command line front-end for the preconditioner sweeps.

    python run_experiments.py list-presets
    python run_experiments.py run table1-left --max-h-exp 4 --jobs 4
    python run_experiments.py run my_sweep.yml --format csv --out results.csv
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from app.config import PRESET_DESCRIPTIONS, load_config
from app.errors import LabError
from app.experiment_pipeline import run_experiment
from app.trace.logger import logger, set_level


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Condition numbers of preconditioned Darcy and Biot systems.")
    parser.add_argument(
        "--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None, help="Override LOG_LEVEL."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("list-presets", help="Print the built-in experiments.")

    run = commands.add_parser("run", help="Run a preset or a YAML config file.")
    run.add_argument("source", help="Preset id (see list-presets) or path to a YAML config.")
    run.add_argument("--format", choices=["md", "csv"], default=None, help="Output table format (default: md).")
    run.add_argument("--out", type=Path, default=None, help="Output path (default: storage/<RESULTS_DIR>/<experiment>.<format>).")
    run.add_argument(
        "--pressure-mode",
        choices=["dg", "exact-schur", "both"],
        default=None,
        help="Pressure operator of the Darcy B2 block.",
    )
    run.add_argument("--minres", action="store_true", help="Also report MINRES iteration counts.")
    run.add_argument("--max-h-exp", type=int, default=None, help="Drop mesh columns finer than h = 2^-N.")
    run.add_argument("--jobs", type=int, default=None, help="Grid points evaluated concurrently.")
    run.add_argument("--allow-large", action="store_true", help="Lift the desk-scale cap on h.")
    run.add_argument("--no-progress", action="store_true", help="Hide the progress bar.")
    return parser.parse_args(argv)


def _configure(args: argparse.Namespace):
    overrides = {
        "output_format": args.format,
        "pressure_mode": args.pressure_mode.replace("-", "_") if args.pressure_mode else None,
        "minres": args.minres or None,
        "jobs": args.jobs,
        "allow_large": args.allow_large or None,
    }
    return load_config(args.source, overrides=overrides, max_h_exponent=args.max_h_exp)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    if args.log_level:
        set_level(args.log_level)

    if args.command == "list-presets":
        for name, description in PRESET_DESCRIPTIONS.items():
            print(f"{name:<14} {description}")
        return 0

    try:
        config = _configure(args)
        _, path = run_experiment(config, out=args.out, progress=not args.no_progress)
    except (LabError, ValueError) as e:
        logger.exception("Experiment failed: %s", e)
        return 1

    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
