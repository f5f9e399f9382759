"""Command line interface.

Usage::

    harmfigs plot reward-deaths --in out/reward_deaths.csv --out fig1.png
    harmfigs plot overestimation --in out/tightness.csv --out fig2a.png --d 10
    harmfigs plot harm-estimates --in out/tightness.csv --out fig2b.svg

Exit code 0 on success, 2 when the input does not match the CSV contract.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harmfigs")
    commands = parser.add_subparsers(dest="command", required=True)
    plot = commands.add_parser("plot", help="render a figure from experiment CSV logs")
    plot.add_argument("kind", choices=FIGURE_KINDS)
    plot.add_argument("--in", dest="input_path", required=True, help="input CSV")
    plot.add_argument("--out", dest="output_path", required=True, help="output image (png/svg)")
    plot.add_argument("--xlabel")
    plot.add_argument("--ylabel")
    group = plot.add_mutually_exclusive_group()
    group.add_argument(
        "--prior-truth", type=float, default=None,
        help="prior mass on the true theory (reference line; default 2^-10)",
    )
    group.add_argument(
        "--d", type=int, default=None,
        help="hidden-vector dimension; sets prior mass to 2^-d",
    )
    plot.add_argument("--bucket-center", type=float, default=0.5)
    plot.add_argument("--bucket-width", type=float, default=0.05)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    prior_truth = 2.0**-10
    if args.prior_truth is not None:
        prior_truth = args.prior_truth
    elif args.d is not None:
        prior_truth = 2.0**-args.d
    spec = FigureSpec(
        kind=args.kind,
        input_path=args.input_path,
        output_path=args.output_path,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
        prior_truth=prior_truth,
        bucket_center=args.bucket_center,
        bucket_width=args.bucket_width,
    )
    try:
        path = render(spec)
    except (SchemaError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
