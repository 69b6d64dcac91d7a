"""Command line: plotviz render --kind {distance|d2d-count} --in CSV --out IMG."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotviz", description="Render goodput figures from sweep CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="csv_path", required=True, help="input sweep CSV")
    p.add_argument("--out", dest="image_path", required=True, help="output image file")
    args = parser.parse_args(argv)

    csv_path = Path(args.csv_path)
    if not csv_path.exists():
        print(f"input not found: {csv_path}", file=sys.stderr)
        return 2
    try:
        spec = FigureSpec(kind=args.kind, csv_path=csv_path, image_path=Path(args.image_path))
        out = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
