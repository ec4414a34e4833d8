"""Command line entry point: render --glob <pattern> --kind <kind> --out <path>."""

import argparse
import sys

from reportplots.render import KINDS, PlotSpec, RenderError, render
from reportplots.schema import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render aggregate metric CSVs to a figure.",
    )
    parser.add_argument("--glob", required=True,
                        help="glob pattern over aggregate CSV files")
    parser.add_argument("--kind", required=True, choices=KINDS,
                        help="figure kind")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default="", help="optional figure title")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(input_glob=args.glob, kind=args.kind,
                    out_path=args.out, title=args.title)
    try:
        out = render(spec)
    except (RenderError, SchemaError) as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
