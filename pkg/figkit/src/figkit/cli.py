"""render --kind {fig2,fig3,strokes} --in DIR --out FILE"""

import argparse
import sys
from pathlib import Path

from .figures import KINDS, FigureSpec, render
from .schema import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render a figure from a simulator run directory.",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="in_dir", required=True, type=Path,
                        metavar="DIR", help="run directory holding the CSVs")
    parser.add_argument("--out", required=True, type=Path, metavar="FILE",
                        help="output image path")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    spec = FigureSpec(kind=args.kind, in_dir=args.in_dir, out_path=args.out,
                      dpi=args.dpi, title=args.title)
    try:
        out = render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
