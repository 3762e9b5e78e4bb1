"""Readers for the experiment CSV schemas the figure scripts consume.

These match the files a batch directory contains: bare K x K float
matrices (policy.csv, median_policy.csv, cycling_average_policy.csv),
runs.csv with per-run summary columns, dn.csv with payoff ratios, and
sweep.csv with decay-sweep rows.  Readers never write; a mismatch aborts
naming the first offending column.
"""

from __future__ import annotations

import csv

import numpy as np


class SchemaError(ValueError):
    pass


def read_matrix(path) -> np.ndarray:
    try:
        mat = np.atleast_2d(np.loadtxt(path, delimiter=","))
    except ValueError as exc:
        raise SchemaError(f"{path}: not a numeric comma-separated matrix ({exc})") from exc
    if mat.shape[0] != mat.shape[1]:
        raise SchemaError(f"{path}: policy matrix must be square, got {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise SchemaError(f"{path}: non-finite entries")
    return mat


def _read_table(path, required: dict[str, type]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing column '{col}'")
        rows = []
        for raw in reader:
            row = {}
            for col, cast in required.items():
                try:
                    row[col] = cast(raw[col])
                except (TypeError, ValueError) as exc:
                    raise SchemaError(f"{path}: bad value in column '{col}': {raw[col]!r}") from exc
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_runs(path) -> list[dict]:
    return _read_table(path, {"seed": int, "converged": int, "welfare": float})


def read_ratios(path) -> list[dict]:
    return _read_table(path, {"b": float, "role": str, "u_run": float, "u_best_pbe": float})


def read_sweep(path) -> list[dict]:
    return _read_table(path, {"gamma": float, "b": float, "payoff": float, "rescaled": float})
