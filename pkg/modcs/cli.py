#!/usr/bin/env python3
#  Copyright (c) modcs contributors.
import argparse
import functools
from importlib.metadata import PackageNotFoundError, version
from typing import List, Optional

from . import structured_logging
from .common import EXIT_CONFIG
from .dynamic.cli import (
    _add_dynamic_args,
    _add_gen_args,
    dynamic_command,
    gen_command,
)
from .errors import ModcsError
from .harness.cli import _add_experiment_args, experiment_command
from .mc_logger import logger
from .rip.cli import (
    _add_bounds_args,
    _add_conditions_args,
    _add_rip_args,
    bounds_command,
    conditions_command,
    rip_command,
)
from .solvers.cli import _add_solve_args, solve_command
from .types import OutputFormat


def _get_package_version() -> str:
    try:
        return version("modcs")
    except PackageNotFoundError:
        return "0+unknown"


def _global_flags() -> argparse.ArgumentParser:
    """Flags every subcommand accepts."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--seed", type=int, default=None, help="Master seed of all random draws"
    )
    parser.add_argument(
        "--out", default=None, help="Output file (directory for 'gen instance')"
    )
    parser.add_argument(
        "--format",
        choices=[f.value for f in OutputFormat],
        default=OutputFormat.CSV.value,
        help="Output format. Defaults to 'csv'.",
    )
    parser.add_argument(
        "--verbose", action="store_true", help="Log at DEBUG level (like MODCS_DEBUG)"
    )
    parser.add_argument(
        "--trace-dir",
        default=None,
        help="Write the NDJSON structured trace into this folder",
    )
    return parser


def build_parser() -> argparse.ArgumentParser:
    pkg_version = _get_package_version()
    prog_name = "modcs"

    parser = argparse.ArgumentParser(
        prog=prog_name,
        description=(
            "modcs: compressive sensing with partially known support, "
            "RIP condition checks and Monte Carlo studies"
        ),
        epilog=(
            "Examples:\n"
            f"  {prog_name} solve --matrix A.csv --y y.csv --known T.csv\n"
            f"  {prog_name} conditions --all-zero\n"
            f"  {prog_name} bounds --curve modcs --m-over-n 0.3\n"
            f"  {prog_name} mc-prob --config tests/example_configs/mc_prob.json "
            "--out table.csv\n"
            f"  {prog_name} dynamic --config tests/example_configs/dynamic.json\n"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {pkg_version}",
        help="Show program's version number and exit",
    )

    subparsers = parser.add_subparsers(dest="command", required=True)
    common = [_global_flags()]

    solve_parser = subparsers.add_parser(
        "solve", parents=common, help="Solve one instance read from CSV files"
    )
    _add_solve_args(solve_parser)
    solve_parser.set_defaults(func=solve_command)

    rip_parser = subparsers.add_parser(
        "rip", parents=common, help="Restricted isometry and orthogonality constants"
    )
    _add_rip_args(rip_parser)
    rip_parser.set_defaults(func=rip_command)

    conditions_parser = subparsers.add_parser(
        "conditions",
        parents=common,
        help="Check the exact-reconstruction sufficient conditions",
    )
    _add_conditions_args(conditions_parser)
    conditions_parser.set_defaults(func=conditions_command)

    bounds_parser = subparsers.add_parser(
        "bounds", parents=common, help="Sparsity bounds for Gaussian matrices"
    )
    _add_bounds_args(bounds_parser)
    bounds_parser.set_defaults(func=bounds_command)

    experiment_help = {
        "mc-prob": "Exact reconstruction probability of modified-CS and CS",
        "noisy": "N-RMSE of modified-CS and CS under measurement noise",
        "regsweep": "RegModCS accuracy over a sweep of gamma",
        "static": "CS and modified-CS on a sparsified synthetic image",
    }
    for name, help_text in experiment_help.items():
        experiment_parser = subparsers.add_parser(name, parents=common, help=help_text)
        _add_experiment_args(experiment_parser)
        experiment_parser.set_defaults(
            func=functools.partial(experiment_command, name=name)
        )

    dynamic_parser = subparsers.add_parser(
        "dynamic", parents=common, help="Recursive reconstruction of a sequence"
    )
    _add_dynamic_args(dynamic_parser)
    dynamic_parser.set_defaults(func=dynamic_command)

    gen_parser = subparsers.add_parser(
        "gen", parents=common, help="Emit synthetic matrices, instances and signals"
    )
    _add_gen_args(gen_parser)
    gen_parser.set_defaults(func=gen_command)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG

    if args.verbose or args.trace_dir:
        structured_logging.init(trace_folder=args.trace_dir, verbose=args.verbose)

    try:
        return args.func(args)
    except (ModcsError, OSError, ValueError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    # Do not add code here, it won't be run. Add them to the function called below.
    raise SystemExit(main())  # pragma: no cover
