#  Copyright (c) modcs contributors.

import argparse
import dataclasses
import os
import sys

import numpy as np

from ..common import (
    dump_json,
    emit,
    EXIT_OK,
    load_json,
    print_report_summary,
    save_matrix_csv,
    write_rows_csv,
)
from ..errors import ConfigError
from ..operators import gaussian_operator, sparsify, synthetic_image
from ..supports import build_support_model
from ..types import OutputFormat
from .runner import DynamicRunConfig, run_dynamic
from .sequence import generate_sequence, SequenceModel

GEN_KINDS = ("sequence", "matrix", "instance", "image")


def _add_dynamic_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the 'dynamic' subcommand to a parser."""
    parser.add_argument(
        "--config",
        required=True,
        help=(
            "JSON run description: a 'model' section (sequence parameters) plus "
            "m0, m, operator, method, alpha, b, gamma, t0, noise_var and solver"
        ),
    )


def _add_gen_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the 'gen' subcommand to a parser."""
    parser.add_argument("kind", choices=GEN_KINDS, help="What to generate")
    parser.add_argument(
        "--config",
        help="Sequence model JSON (kind 'sequence'); a run config works too",
    )
    parser.add_argument("--m", type=int, help="Rows of the matrix")
    parser.add_argument("--n", type=int, help="Signal length")
    parser.add_argument("--s", type=int, help="Support size (kind 'instance')")
    parser.add_argument("--u", type=int, default=0, help="|Delta|. Defaults to 0.")
    parser.add_argument("--e", type=int, default=0, help="|Delta_e|. Defaults to 0.")
    parser.add_argument(
        "--signal-var",
        type=float,
        default=100.0,
        help="Variance of the nonzero entries (kind 'instance'). Defaults to 100.",
    )
    parser.add_argument(
        "--n-side", type=int, default=32, help="Image side (kind 'image')"
    )
    parser.add_argument(
        "--energy",
        type=float,
        default=99.0,
        help="Wavelet energy percentage kept (kind 'image'). Defaults to 99.",
    )


def dynamic_command(args: argparse.Namespace) -> int:
    cfg = DynamicRunConfig.from_dict(load_json(args.config))
    if args.seed is not None:
        cfg.model = dataclasses.replace(cfg.model, seed=args.seed)
    trace = run_dynamic(cfg)
    if OutputFormat(args.format) == OutputFormat.JSON:
        payload = {
            "method": trace.method,
            "config": cfg.to_dict(),
            "frames": trace.to_rows(),
            "elapsed": trace.elapsed,
        }
        text = dump_json(payload, args.out)
    else:
        text = write_rows_csv(trace.to_rows(), args.out)
    nrmse = trace.nrmse
    carried = sum(f.carried for f in trace.frames)
    emit(
        text,
        args.out,
        "Dynamic Reconstruction",
        [
            f"method: {trace.method}",
            f"frames: {len(trace)}",
            f"mean N-RMSE: {np.nanmean(nrmse):.4g}",
            f"last N-RMSE: {nrmse[-1]:.4g}",
            f"frames carried over: {carried}",
            f"elapsed: {trace.elapsed:.1f}s",
        ],
    )
    return EXIT_OK


def _model_from_config(path: str) -> SequenceModel:
    data = load_json(path)
    if "model" in data:
        data = data["model"]
    try:
        return SequenceModel.from_dict(data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid sequence model in {path}: {e}") from e


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError(f"gen {args.kind} needs {', '.join(missing)}")


def _write_matrix(matrix: np.ndarray, out) -> None:
    if out is None:
        np.savetxt(sys.stdout, np.atleast_2d(matrix), delimiter=",", fmt="%.17g")
    else:
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
        save_matrix_csv(out, matrix)


def _gen_sequence(args: argparse.Namespace, seed: int) -> None:
    _require(args, "config")
    model = _model_from_config(args.config)
    if args.seed is not None:
        model = dataclasses.replace(model, seed=seed)
    frames = generate_sequence(model)
    if OutputFormat(args.format) == OutputFormat.JSON:
        payload = {
            "model": model.to_dict(),
            "frames": [
                {"t": t, "x": f.x, "support": f.support} for t, f in enumerate(frames)
            ],
        }
        text = dump_json(payload, args.out)
        if args.out is None:
            print(text)
    else:
        _write_matrix(np.vstack([f.x for f in frames]), args.out)
    if args.out is not None:
        print_report_summary(
            "Generated Sequence",
            [
                f"frames: {len(frames)}",
                f"first support size: {frames[0].support.size}",
                f"last support size: {frames[-1].support.size}",
            ],
            args.out,
        )


def _gen_matrix(args: argparse.Namespace, seed: int) -> None:
    _require(args, "m", "n")
    _write_matrix(gaussian_operator(args.m, args.n, seed).to_dense(), args.out)


def _gen_instance(args: argparse.Namespace, seed: int) -> None:
    _require(args, "m", "n", "s", "out")
    rng = np.random.default_rng(seed)
    N = np.sort(rng.choice(args.n, size=args.s, replace=False))
    model = build_support_model(args.n, N, args.u, args.e, rng)
    x = np.zeros(args.n)
    x[N] = np.sqrt(args.signal_var) * rng.standard_normal(N.size)
    A = gaussian_operator(args.m, args.n, int(rng.integers(0, 2**31))).to_dense()
    os.makedirs(args.out, exist_ok=True)
    save_matrix_csv(os.path.join(args.out, "A.csv"), A)
    save_matrix_csv(os.path.join(args.out, "y.csv"), (A @ x)[:, None])
    save_matrix_csv(os.path.join(args.out, "x.csv"), x[:, None])
    np.savetxt(os.path.join(args.out, "T.csv"), model.T[:, None], fmt="%d")
    dump_json(model.to_dict(), os.path.join(args.out, "support.json"))
    print_report_summary(
        "Generated Instance",
        [
            f"m={args.m} n={args.n} s={args.s} u={args.u} e={args.e}",
            f"files: A.csv y.csv x.csv T.csv support.json in {args.out}",
        ],
    )


def _gen_image(args: argparse.Namespace, seed: int) -> None:
    rng = np.random.default_rng(seed)
    image = sparsify(synthetic_image(args.n_side, rng), args.energy)
    _write_matrix(image, args.out)


def gen_command(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.kind == "sequence":
        _gen_sequence(args, seed)
    elif args.kind == "matrix":
        _gen_matrix(args, seed)
    elif args.kind == "instance":
        _gen_instance(args, seed)
    else:
        _gen_image(args, seed)
    return EXIT_OK
