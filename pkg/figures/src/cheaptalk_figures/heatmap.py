"""Render a policy matrix CSV as a heatmap (states horizontal, messages vertical)."""

import argparse
import sys

from cheaptalk_figures import render, schemas


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="K x K policy matrix CSV")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    try:
        mat = schemas.read_matrix(args.input)
    except schemas.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    fig, _ = render.heatmap(mat, args.title)
    render.save(fig, args.out)
    print(f"heatmap written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
