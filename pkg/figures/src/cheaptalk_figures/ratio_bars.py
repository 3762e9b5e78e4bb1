"""Render payoff ratios against the best equilibrium as grouped bars."""

import argparse
import sys

from cheaptalk_figures import render, schemas


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="dn.csv with b,role,u_run,u_best_pbe rows")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    try:
        rows = schemas.read_ratios(args.input)
    except schemas.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    fig, _ = render.ratio_bars(rows, args.title)
    render.save(fig, args.out)
    print(f"ratio bars written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
