"""partnerplots command line: render figures from artifact directories.

Either pass a JSON figure spec (--spec FILE with keys kind, input_dir,
output, options) or the equivalent flags.  Output format follows the file
extension; with no extension both PNG and SVG are written.
"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaVersionError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partnerplots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from an artifact directory")
    p.add_argument("--spec", help="JSON figure spec file")
    p.add_argument("--kind", choices=FIGURE_KINDS)
    p.add_argument("--input", help="artifact directory")
    p.add_argument("--out", help="output image path (.png/.svg, or no extension for both)")
    p.add_argument("--option", action="append", default=[], metavar="KEY=VALUE",
                   help="styling/selection option (repeatable)")
    return parser


def spec_from_args(args) -> FigureSpec:
    if args.spec:
        payload = json.loads(open(args.spec, encoding="utf-8").read())
        return FigureSpec(
            kind=payload["kind"],
            input_dir=payload["input_dir"],
            output=payload["output"],
            options=payload.get("options", {}),
        )
    if not (args.kind and args.input and args.out):
        raise ValueError("need --spec, or all of --kind/--input/--out")
    options = {}
    for item in args.option:
        key, _, value = item.partition("=")
        options[key] = value
    return FigureSpec(kind=args.kind, input_dir=args.input, output=args.out, options=options)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as exc:
        return 64 if exc.code not in (0, None) else 0
    try:
        written = render(spec_from_args(args))
    except SchemaVersionError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 65
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 66
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
