#  Copyright (c) modcs contributors.

import argparse
import dataclasses

from ..common import emit, EXIT_OK
from ..mc_logger import logger
from ..types import OutputFormat
from .config import ExperimentConfig
from .experiments import EXPERIMENTS, run_experiment


def _add_experiment_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments shared by the Monte Carlo subcommands to a parser."""
    parser.add_argument(
        "--config",
        help=(
            "JSON experiment description (see tests/example_configs/). "
            "Without it the built-in defaults are used."
        ),
    )
    parser.add_argument(
        "--trials", type=int, default=None, help="Override the trials per cell"
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker threads. Defaults to the config value or MODCS_WORKERS.",
    )


def load_experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """Read ``--config`` and apply the command-line overrides."""
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def experiment_command(args: argparse.Namespace, name: str) -> int:
    assert name in EXPERIMENTS, name
    cfg = load_experiment_config(args)
    logger.info(
        f"{name}: n={cfg.n} s={cfg.s} trials={cfg.trials} "
        f"workers={cfg.worker_count} seed={cfg.seed}"
    )
    report = run_experiment(name, cfg)
    text = report.write(args.out, OutputFormat(args.format))
    emit(text, args.out, f"Experiment Summary ({name})", report.summary_lines())
    return EXIT_OK
