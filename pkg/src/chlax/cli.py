"""Command-line entry point for the verification driver.

``chlax`` with no arguments runs the full battery (orders 1..3 for the
compatibility closure and the exponential profiles, orders 1..2 for the
symmetry families and the reduction registry) and prints a text report;
the exit status is 0 exactly when every check passed.

``--export-cases`` and ``--import-cases`` are standalone actions: the
first writes the reduction-case registry to a JSON file, the second
re-parses such a file and confirms it matches a freshly built registry.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .reduction import CASE_IDS, ReductionError, export_cases, import_cases
from .report import RunConfig, run


def _parse_ns(text: str) -> tuple:
    try:
        ns = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text!r}")
    if not ns:
        raise argparse.ArgumentTypeError("at least one order is required")
    for n in ns:
        if n < 1:
            raise argparse.ArgumentTypeError(f"orders must be positive, got {n}")
    return ns


def _parse_cases(text: str) -> tuple:
    if text.strip() == "all":
        return CASE_IDS
    cases = tuple(p.strip() for p in text.split(",") if p.strip())
    unknown = [c for c in cases if c not in CASE_IDS]
    if unknown:
        raise argparse.ArgumentTypeError(
            f"unknown case id(s) {', '.join(unknown)}; known: {', '.join(CASE_IDS)}"
        )
    return cases


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chlax",
        description="verify the nonisospectral hierarchy, its symmetry "
        "families, and the registry of reductions to 1+1 form",
    )
    parser.add_argument(
        "--n", type=_parse_ns, default=(1, 2, 3), metavar="1,2,3",
        help="comma list of hierarchy orders (default: 1,2,3; orders above 2 "
        "skip the symmetry/reduction layers, above 3 also the profiles)",
    )
    parser.add_argument(
        "--case", type=_parse_cases, default=CASE_IDS, metavar="I.1,IV.2|all",
        help="comma list of reduction case ids, or 'all' (default)",
    )
    parser.add_argument(
        "--oracle-samples", type=int, default=100, metavar="N",
        help="random sample points per numeric certificate (default: 100)",
    )
    parser.add_argument(
        "--seed", type=int, default=0, metavar="S",
        help="seed for the oracle's random sample points (default: 0)",
    )
    parser.add_argument(
        "--format", choices=("text", "latex", "json"), default="text",
        help="report format (default: text; timings appear only in text)",
    )
    parser.add_argument(
        "--fail-fast", action="store_true",
        help="stop scheduling further checks after the first failure",
    )
    parser.add_argument(
        "--export-cases", metavar="FILE",
        help="write the reduction-case registry to FILE as JSON and exit",
    )
    parser.add_argument(
        "--import-cases", metavar="FILE",
        help="validate a registry JSON file against a fresh build and exit",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    if args.export_cases is not None:
        n = min((k for k in args.n if k in (1, 2)), default=1)
        payload = export_cases(args.export_cases, n=n)
        print(f"wrote {len(payload['cases'])} cases (n={n}) to {args.export_cases}")
        return 0

    if args.import_cases is not None:
        try:
            payload = import_cases(args.import_cases)
        except (OSError, ValueError, KeyError, ReductionError) as err:
            print(f"import failed: {err}", file=sys.stderr)
            return 1
        print(
            f"imported {len(payload['cases'])} cases (n={payload['n']}) "
            f"from {args.import_cases}: all match"
        )
        return 0

    config = RunConfig(
        ns=args.n,
        cases=args.case,
        oracle_samples=args.oracle_samples,
        seed=args.seed,
        fail_fast=args.fail_fast,
    )
    report = run(config)
    if args.format == "json":
        sys.stdout.write(report.to_json())
    elif args.format == "latex":
        sys.stdout.write(report.to_latex())
    else:
        sys.stdout.write(report.to_text())
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
