"""Command line front end: `cavityspin-figures render <id> ...`."""

import argparse
import sys

from .recipes import RECIPES, render
from .schema import SchemaError


def build_parser():
    p = argparse.ArgumentParser(
        prog="cavityspin-figures",
        description="Render figures from cavityspin CSV outputs.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure")
    r.add_argument("figure_id", choices=sorted(RECIPES))
    r.add_argument("--input-dir", required=True,
                   help="directory holding the CSV outputs")
    r.add_argument("--out", default=None,
                   help="output base path (writes BASE.svg and BASE.png;"
                        " default: <input-dir>/<figure-id>)")
    sub.add_parser("list", help="list available figures")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for fid in sorted(RECIPES):
            rec = RECIPES[fid]
            inputs = ", ".join(pat for pat, _, _ in rec.inputs)
            print(f"{fid:18s} {rec.description}  [inputs: {inputs}]")
        return 0
    try:
        paths = render(args.figure_id, args.input_dir, args.out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
