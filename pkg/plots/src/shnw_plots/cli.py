"""shnw-plot: render the standard figure set from a result directory."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_KINDS, FigureRequest, plot


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shnw-plot",
                                     description="Figure generation for shnw result directories")
    parser.add_argument("dir", help="result directory (manifest + CSVs)")
    parser.add_argument("--kinds", nargs="+", choices=list(FIGURE_KINDS),
                        default=list(FIGURE_KINDS))
    parser.add_argument("--fmt", choices=["png", "svg"], default="png")
    parser.add_argument("--dpi", type=int, default=110)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    request = FigureRequest(input_dir=Path(args.dir), kinds=tuple(args.kinds),
                            fmt=args.fmt, dpi=args.dpi)
    try:
        files, annotations = plot(request)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in files:
        print(path)
    for kind, values in annotations.items():
        if values:
            detail = ", ".join(f"{k}={v}" for k, v in values.items())
            print(f"# {kind}: {detail}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
