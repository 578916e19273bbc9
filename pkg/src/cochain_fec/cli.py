"""Command-line entry point: ``cochain-fec verify|convergence|constants|cohomology``."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import harness
from .harness import ConfigError, RunConfig
from .tensorfec import IndeterminateRankError

SEED_ENV = "COCHAIN_FEC_SEED"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _tol(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} is not a number: {value!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=int, default=3, help="element order m (3..12)")
    common.add_argument("--dim", type=int, default=2, help="hypercube dimension n")
    common.add_argument("--rho", type=float, default=0.2, help="perturbation radius, 0 < rho <= 1/3")
    common.add_argument("--levels", type=int, default=5, help="dyadic levels for convergence")
    common.add_argument("--seed", type=int, default=None,
                        help=f"64-bit seed (falls back to ${SEED_ENV}, then 0)")
    common.add_argument("--quad-panels", type=int, default=harness.MOLLIFIER_PANELS)
    common.add_argument("--quad-points", type=int, default=harness.MOLLIFIER_POINTS)
    common.add_argument("--tol", type=_tol, action="append", default=[], metavar="NAME=VALUE",
                        help="override the tolerance of one check")
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    parser = _Parser(prog="cochain-fec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("verify", parents=[common], help="run all property checks")
    conv = sub.add_parser("convergence", parents=[common], help="single-cell h-convergence table")
    conv.add_argument("--field", choices=("sin", "poly"), default="sin")
    const = sub.add_parser("constants", parents=[common], help="stability constants vs. empirical norms")
    const.add_argument("--rho-list", type=_float_list, default=[0.3, 0.2, 0.1])
    sub.add_parser("cohomology", parents=[common], help="cohomology dimensions of the tensor complex")
    return parser


def _seed(arg: Optional[int]) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is None or not env.strip():
        return 0
    try:
        return int(env.strip(), 0)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} is not an integer: {env!r}") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(args: argparse.Namespace) -> int:
    cfg = RunConfig(
        order=args.order,
        dim=args.dim,
        rho=args.rho,
        quad_panels=args.quad_panels,
        quad_points=args.quad_points,
        seed=_seed(args.seed),
        tolerances=dict(args.tol),
        out=args.out,
    ).validate()

    if args.command == "verify":
        report = harness.cmd_verify(cfg)
        text = harness.report_to_csv(report) if args.format == "csv" else harness.to_json(report)
        ok = harness.report_passed(report)
    elif args.command == "convergence":
        rows = harness.convergence_table(cfg, args.levels, args.field)
        ok = harness.convergence_passed(rows, args.field)
        text = harness.to_json(rows) if args.format == "json" else harness.to_csv(rows)
    elif args.command == "constants":
        rows = harness.constants_table(cfg, args.rho_list)
        ok = all(r["pass"] for r in rows)
        text = harness.to_json(rows) if args.format == "json" else harness.to_csv(rows)
    else:
        report = harness.cmd_cohomology(cfg)
        ok = report["pass"]
        if args.format == "csv":
            text = harness.to_csv([{"k": k, "dim": d, "expected": e}
                                   for k, (d, e) in enumerate(zip(report["dims"], report["expected"]))])
        else:
            text = harness.to_json(report)
    _emit(text, cfg.out)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        return run(args)
    except ConfigError as exc:
        print(f"cochain-fec: configuration rejected: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IndeterminateRankError as exc:
        print(f"cochain-fec: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
