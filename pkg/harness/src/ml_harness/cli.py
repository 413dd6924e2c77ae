"""Command-line wrapper: run an experiment spec, compare two reports."""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .experiment import ExperimentError, ExperimentSpec, compare_reports, run_experiment
from .matrix import MatrixError


def cmd_run(args) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    report = run_experiment(spec)
    with open(args.out, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    return 0


def cmd_compare(args) -> int:
    with open(args.a) as f:
        a = json.load(f)
    with open(args.b) as f:
        b = json.load(f)
    result = compare_reports(a, b, tolerance=args.tolerance)
    json.dump(result, sys.stdout, indent=2, sort_keys=True)
    print()
    return 3 if result["regressed"] else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ml-harness",
        description="Benchmark models on exported flow feature matrices",
    )
    parser.add_argument("--version", action="version", version=f"ml-harness {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("run", help="run one experiment spec")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("--out", required=True, help="report JSON destination")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="diff two report files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--tolerance", type=float, default=0.0)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ExperimentError, MatrixError) as exc:
        print(f"ml-harness: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ml-harness: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
