"""Render rescaled sender payoff against the decay rate, one line per bias."""

import argparse
import sys

from cheaptalk_figures import render, schemas


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="sweep.csv with gamma,b,payoff,rescaled rows")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    try:
        rows = schemas.read_sweep(args.input)
    except schemas.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    fig, _ = render.sweep_lines(rows, args.title)
    render.save(fig, args.out)
    print(f"sweep lines written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
