"""report-plots: render sweep CSV files to a log-log figure.

Exit codes: 0 success, 2 bad input (missing columns, too few points), 1
internal error.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .plotting import PlotSpec, plot


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="report-plots", description=__doc__)
    ap.add_argument("csv", nargs="+", help="sweep CSV file(s)")
    ap.add_argument("-o", "--out", required=True, help="output image (png/svg)")
    ap.add_argument(
        "--ref-slopes",
        help="comma-separated reference slopes (default: 2n, 2n+1, 2n+2/D per file)",
    )
    ap.add_argument("--log-base", type=float, default=10.0)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    refs = ()
    if args.ref_slopes:
        try:
            refs = tuple(float(s) for s in args.ref_slopes.split(","))
        except ValueError:
            print(f"error: bad --ref-slopes {args.ref_slopes!r}", file=sys.stderr)
            return 2
    try:
        spec = PlotSpec(
            inputs=tuple(args.csv), output=args.out,
            reference_slopes=refs, log_base=args.log_base,
        )
        out = plot(spec)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
