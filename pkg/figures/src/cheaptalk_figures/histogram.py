"""Render the welfare histogram of a batch from its runs.csv."""

import argparse
import sys

import numpy as np

from cheaptalk_figures import render, schemas


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="batch runs.csv")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default="")
    parser.add_argument("--bins", type=int, default=render.DEFAULT_BINS)
    args = parser.parse_args(argv)
    try:
        rows = schemas.read_runs(args.input)
    except schemas.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    welfare = np.array([r["welfare"] for r in rows])
    fig, _ = render.histogram(welfare, bins=args.bins, title=args.title)
    render.save(fig, args.out)
    print(f"histogram written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
