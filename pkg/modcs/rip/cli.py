#  Copyright (c) modcs contributors.

import argparse

import numpy as np

from ..common import (
    dump_json,
    emit,
    EXIT_OK,
    load_json,
    load_matrix_csv,
    write_rows_csv,
)
from ..errors import ConfigError
from ..types import BoundRule, OutputFormat, Verdict
from .bounds import DEFAULT_CHURN, max_sparsity_fraction, rho_curve
from .conditions import (
    check_all,
    check_corollary1,
    check_cs_conditions,
    check_prop1,
    check_theorem1,
    resolve_k,
)
from .constants import RipTable

CHECKS = ("all", "theorem1", "corollary1", "prop1", "cs")


def _add_rip_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the 'rip' subcommand to a parser."""
    parser.add_argument("--matrix", required=True, help="Headerless CSV file of A")
    parser.add_argument(
        "--delta", type=int, nargs="+", default=[], metavar="S", help="delta_S sizes"
    )
    parser.add_argument(
        "--theta",
        type=int,
        nargs=2,
        action="append",
        default=[],
        metavar=("S1", "S2"),
        help="theta_{S1,S2} sizes; repeat for several pairs",
    )
    parser.add_argument(
        "--budget",
        type=int,
        default=None,
        help="Maximum subsets to enumerate. Defaults to MODCS_ENUM_BUDGET.",
    )
    parser.add_argument(
        "--sample-trials",
        type=int,
        default=10_000,
        help=(
            "Random subsets used when enumeration exceeds the budget (the value is "
            "then a lower bound). 0 turns sampling off. Defaults to 10000."
        ),
    )


def _add_conditions_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the 'conditions' subcommand to a parser."""
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--matrix", help="Headerless CSV file of A")
    source.add_argument("--table", help="RipTable JSON written by 'modcs rip'")
    source.add_argument(
        "--all-zero", action="store_true", help="Use the all-zero constant table"
    )
    parser.add_argument("--k", type=int, help="|T|")
    parser.add_argument("--u", type=int, default=0, help="|Delta|. Defaults to 0.")
    parser.add_argument("--s", type=int, help="|N|; also enables the CS checks")
    parser.add_argument("--e", type=int, help="|Delta_e|; defaults to 0 with --s")
    parser.add_argument(
        "--check", choices=CHECKS, default="all", help="Which conditions to evaluate"
    )
    parser.add_argument("--budget", type=int, default=None)
    parser.add_argument("--sample-trials", type=int, default=10_000)


def _add_bounds_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the 'bounds' subcommand to a parser."""
    parser.add_argument(
        "--curve",
        type=BoundRule,
        choices=list(BoundRule),
        default=BoundRule.MODCS,
        help="Sufficient condition to evaluate. Defaults to 'modcs'.",
    )
    parser.add_argument(
        "--m-over-n", type=float, nargs="+", default=[0.3], help="Measurement ratios"
    )
    parser.add_argument(
        "--points", type=int, default=50, help="Sparsity ratios per curve"
    )
    parser.add_argument(
        "--max-frac",
        type=float,
        default=None,
        help="Largest s/n on the curve. Defaults to the curve's own limit.",
    )
    parser.add_argument(
        "--max-sparsity",
        action="store_true",
        help="Emit the largest admissible s/n per ratio instead of the curve",
    )
    parser.add_argument(
        "--n", type=int, default=None, help="Search integer s on this n instead"
    )
    parser.add_argument(
        "--churn",
        type=float,
        default=DEFAULT_CHURN,
        help="u = e = churn * s. Defaults to 1/50.",
    )


def _load_table(args: argparse.Namespace) -> RipTable:
    if args.all_zero:
        return RipTable.zeros()
    if args.table:
        return RipTable.from_dict(load_json(args.table))
    return RipTable.from_matrix(
        load_matrix_csv(args.matrix),
        budget=args.budget,
        sample_trials=args.sample_trials,
        seed=args.seed or 0,
    )


def rip_command(args: argparse.Namespace) -> int:
    if not args.delta and not args.theta:
        raise ConfigError("give at least one --delta or --theta")
    table = RipTable.from_matrix(
        load_matrix_csv(args.matrix),
        budget=args.budget,
        sample_trials=args.sample_trials,
        seed=args.seed or 0,
    )
    rows = []
    for S in args.delta:
        rows.append(
            {
                "constant": "delta",
                "S1": S,
                "S2": "",
                "value": table.delta(S),
                "mode": table.delta_mode(S).value,
            }
        )
    for S1, S2 in args.theta:
        rows.append(
            {
                "constant": "theta",
                "S1": S1,
                "S2": S2,
                "value": table.theta(S1, S2),
                "mode": table.theta_mode(S1, S2).value,
            }
        )
    if OutputFormat(args.format) == OutputFormat.JSON:
        text = dump_json(table.to_dict(), args.out)
    else:
        text = write_rows_csv(rows, args.out)
    emit(
        text,
        args.out,
        "RIP Constants",
        [f"matrix hash: {table.matrix_hash}"]
        + [
            f"{r['constant']} {r['S1']} {r['S2']}: {r['value']:.10g} ({r['mode']})"
            for r in rows
        ],
    )
    return EXIT_OK


def conditions_command(args: argparse.Namespace) -> int:
    rip = _load_table(args)
    e = args.e if args.e is not None or args.s is None else 0
    k = args.k
    if k is None and args.s is None:
        k = 0
    k = resolve_k(args.u, k, args.s, e)
    if args.check == "theorem1":
        reports = [check_theorem1(k, args.u, rip)]
    elif args.check == "corollary1":
        reports = check_corollary1(k, args.u, rip)
    elif args.check == "prop1":
        reports = [check_prop1(k, args.u, rip)]
    elif args.check == "cs":
        if args.s is None:
            raise ConfigError("--check cs needs --s")
        reports = check_cs_conditions(args.s, rip)
    else:
        reports = check_all(rip, k, args.u, args.s)

    if OutputFormat(args.format) == OutputFormat.JSON:
        text = dump_json([r.to_dict() for r in reports], args.out)
    else:
        rows = [
            {
                "name": r.name,
                "verdict": r.verdict.value,
                "lhs": r.lhs,
                "threshold": r.threshold,
                "lower_bound": r.lower_bound,
            }
            for r in reports
        ]
        text = write_rows_csv(rows, args.out)
    passed = sum(r.verdict == Verdict.PASS for r in reports)
    emit(
        text,
        args.out,
        "Condition Checks",
        [f"k={k} u={args.u} s={args.s}", f"{passed}/{len(reports)} pass"]
        + [f"{r.name}: {r.verdict}" for r in reports],
    )
    return EXIT_OK


def bounds_command(args: argparse.Namespace) -> int:
    rows = []
    if args.max_sparsity:
        for ratio in args.m_over_n:
            for rule in BoundRule:
                rows.append(
                    {
                        "m_over_n": ratio,
                        "rule": rule.value,
                        "max_s_over_n": max_sparsity_fraction(
                            ratio, rule, n=args.n, churn=args.churn
                        ),
                    }
                )
    else:
        for ratio in args.m_over_n:
            top = args.max_frac
            if top is None:
                top = max_sparsity_fraction(ratio, args.curve, churn=args.churn)
            fractions = np.linspace(0.0, top, args.points).tolist()
            for frac, rho in rho_curve(args.curve, ratio, fractions, args.churn):
                rows.append(
                    {
                        "rule": args.curve.value,
                        "m_over_n": ratio,
                        "s_over_n": frac,
                        "rho": rho,
                    }
                )
    if OutputFormat(args.format) == OutputFormat.JSON:
        text = dump_json(rows, args.out)
    else:
        text = write_rows_csv(rows, args.out)
    emit(text, args.out, "Sparsity Bounds", [f"{len(rows)} rows"])
    return EXIT_OK
