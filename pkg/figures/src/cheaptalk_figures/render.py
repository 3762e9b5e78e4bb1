"""Shared rendering core: pure functions from parsed CSV data to figures."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DEFAULT_BINS = 30


def heatmap(mat: np.ndarray, title: str = ""):
    """States on the horizontal axis, messages vertical, color = mass."""
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    im = ax.imshow(mat.T, origin="lower", aspect="equal", cmap="viridis", vmin=0.0, vmax=1.0)
    ax.set_xlabel("state index")
    ax.set_ylabel("message index")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="probability mass")
    fig.tight_layout()
    return fig, mat


def histogram(values: np.ndarray, bins: int = DEFAULT_BINS, title: str = ""):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    counts, edges, _ = ax.hist(values, bins=bins, color="#3b6ea5", edgecolor="white")
    ax.set_xlabel("normalized welfare of final policy")
    ax.set_ylabel("runs")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig, (edges, counts)


def ratio_bars(rows: list[dict], title: str = ""):
    biases = sorted({r["b"] for r in rows})
    roles = ["sender", "receiver"]
    width = 0.35
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    xs = np.arange(len(biases))
    series = {}
    for j, role in enumerate(roles):
        vals = []
        for b in biases:
            match = [r for r in rows if r["role"] == role and r["b"] == b]
            u_run, u_cs = match[0]["u_run"], match[0]["u_best_pbe"]
            vals.append((u_run - u_cs) / abs(u_cs) if abs(u_cs) > 1e-9 else np.nan)
        series[role] = vals
        ax.bar(xs + (j - 0.5) * width, vals, width, label=role)
    ax.set_xticks(xs, [f"b={b:g}" for b in biases])
    ax.set_ylabel("payoff ratio vs best equilibrium")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig, series


def sweep_lines(rows: list[dict], title: str = ""):
    biases = sorted({r["b"] for r in rows})
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    series = {}
    for b in biases:
        pts = sorted(((r["gamma"], r["rescaled"]) for r in rows if r["b"] == b))
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        series[b] = (xs, ys)
        ax.plot(xs, ys, marker="o", label=f"b={b:g}")
    ax.set_xscale("log")
    ax.set_xlabel("temperature decay rate")
    ax.set_ylabel("average sender payoff (rescaled per series)")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig, series


def save(fig, out_path) -> None:
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
