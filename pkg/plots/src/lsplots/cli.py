"""CLI: render Figure-1-style panels and the gap table from harness CSVs."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, render_leadtime_figure
from .tables import render_gap_table, write_gap_table


def cmd_figure1(args) -> int:
    spec = FigureSpec.from_directory(args.in_dir, args.out_dir, fmt=args.format)
    written = render_leadtime_figure(spec)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_table2(args) -> int:
    if args.out:
        path = write_gap_table(args.in_file, args.out, fmt=args.format)
        print(f"wrote {path}")
    else:
        sys.stdout.write(render_gap_table(args.in_file, fmt=args.format))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plots", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("figure1", help="render lead-time cost panels")
    sp.add_argument("--in", dest="in_dir", required=True, help="directory with leadtime_cv*_p*.csv")
    sp.add_argument("--out", dest="out_dir", required=True)
    sp.add_argument("--format", default="svg", choices=["svg", "png"])
    sp.set_defaults(fn=cmd_figure1)

    sp = sub.add_parser("table2", help="render the gap summary table")
    sp.add_argument("--in", dest="in_file", required=True, help="harness *_summary.csv")
    sp.add_argument("--out", default=None, help="write here instead of stdout")
    sp.add_argument("--format", default="text", choices=["text", "html"])
    sp.set_defaults(fn=cmd_table2)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
