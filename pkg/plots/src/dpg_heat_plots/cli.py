"""Command line entry point: dpg-heat-plots --csv ... --kind ... --out ...

Exit codes: 0 success, 1 bad arguments or CSV schema mismatch.
"""

from __future__ import annotations

import argparse
import sys

from .figures import DEFAULT_ERROR_COLUMNS, FigureSpec, PlotDataError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpg-heat-plots",
        description="Render error and stability figures from dpg-heat CSVs",
    )
    parser.add_argument(
        "--csv", action="append", required=True,
        help="input CSV path (repeat for several files)",
    )
    parser.add_argument("--kind", choices=("errors", "stability"), required=True)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--columns", default=",".join(DEFAULT_ERROR_COLUMNS),
        help="comma-separated error columns (errors figure only)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    columns = tuple(c for c in args.columns.split(",") if c)
    try:
        spec = FigureSpec(
            csv_paths=tuple(args.csv), kind=args.kind, out=args.out, columns=columns
        )
        render(spec)
    except (PlotDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
