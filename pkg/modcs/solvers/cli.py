#  Copyright (c) modcs contributors.

import argparse

from ..common import (
    dump_json,
    emit,
    EXIT_INFEASIBLE,
    EXIT_OK,
    load_json,
    load_matrix_csv,
    load_vector_csv,
    parse_index_list,
    write_rows_csv,
)
from ..errors import ConfigError
from ..types import OutputFormat, SolverStatus
from .oracle import solve_lp_reference
from .programs import (
    dual_certificate,
    kkt_residuals,
    solve_bp,
    solve_modcs,
    solve_regmodcs,
    SolverConfig,
)

PROGRAMS = ("modcs", "bp", "regmodcs", "lp-reference")


def _add_solve_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the 'solve' subcommand to a parser."""
    parser.add_argument("--matrix", required=True, help="Headerless CSV file of A")
    parser.add_argument("--y", required=True, help="CSV file of the measurements")
    parser.add_argument(
        "--known",
        default="",
        help="Known support T: comma-separated indices or a CSV file. Empty for BP.",
    )
    parser.add_argument(
        "--program",
        choices=PROGRAMS,
        default="modcs",
        help="Program to solve. Defaults to 'modcs'.",
    )
    parser.add_argument("--mu", help="CSV file of mu_T, in the order of T (regmodcs)")
    parser.add_argument(
        "--gamma", type=float, default=0.0, help="RegModCS weight. Defaults to 0."
    )
    parser.add_argument(
        "--solver-config", help="JSON file with interior-point settings"
    )
    parser.add_argument(
        "--certify",
        action="store_true",
        help="Also report the KKT residuals and the dual certificate of x_hat",
    )


def solve_command(args: argparse.Namespace) -> int:
    A = load_matrix_csv(args.matrix)
    y = load_vector_csv(args.y)
    T = parse_index_list(args.known)
    settings = load_json(args.solver_config) if args.solver_config else None
    cfg = SolverConfig.from_dict(settings)

    if args.program == "bp":
        if T.size:
            raise ConfigError("--known must be empty for --program bp")
        result = solve_bp(A, y, cfg)
    elif args.program == "regmodcs":
        if args.mu is None:
            raise ConfigError("--program regmodcs needs --mu")
        result = solve_regmodcs(A, y, T, load_vector_csv(args.mu), args.gamma, cfg)
    elif args.program == "lp-reference":
        result = solve_lp_reference(A, y, T)
    else:
        result = solve_modcs(A, y, T, cfg)

    payload = result.to_dict()
    if args.certify and result.dual is not None:
        payload["kkt"] = kkt_residuals(A, result, T)
        payload["certificate"] = dual_certificate(A, result.x_hat, T)._asdict()

    if OutputFormat(args.format) == OutputFormat.JSON:
        text = dump_json(payload, args.out)
    else:
        rows = [{"index": i, "x_hat": v} for i, v in enumerate(result.x_hat)]
        text = write_rows_csv(rows, args.out)
    emit(
        text,
        args.out,
        "Solve Summary",
        [
            f"program: {result.program}",
            f"status: {result.status}",
            f"objective: {result.objective:.10g}",
            f"primal residual: {result.primal_residual:.3g}",
            f"iterations: {result.iterations}",
        ],
    )
    return EXIT_INFEASIBLE if result.status == SolverStatus.INFEASIBLE else EXIT_OK
