"""CSV artifact writers.

All numeric fields are written with repr-level precision ("%.17g") so that
re-reading a file reproduces the exact doubles; every artifact directory
carries the frozen resolved config that produced it.
"""

from __future__ import annotations

import io as _io
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from cheaptalk import config as config_mod
from cheaptalk.harness import BatchResult, ExperimentConfig, RunResult, welfare_histogram

FMT = "%.17g"


def _g(x: float) -> str:
    return FMT % x


@contextmanager
def _open_out(path_or_stream):
    """Accept a filesystem path or an already-open text stream."""
    if isinstance(path_or_stream, _io.TextIOBase):
        yield path_or_stream
    else:
        with open(path_or_stream, "w") as fh:
            yield fh


def ensure_dir(path, force: bool) -> Path:
    path = Path(path)
    if path.exists() and any(path.iterdir()):
        if not force:
            raise FileExistsError(f"output directory {path} is not empty (use --force)")
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_matrix(path, mat: np.ndarray) -> None:
    np.savetxt(path, np.asarray(mat, dtype=float), delimiter=",", fmt=FMT)


def read_matrix(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=","))


def write_run_dir(run: RunResult, cfg: ExperimentConfig, out_dir, force: bool = False) -> Path:
    out = ensure_dir(out_dir, force)
    (out / "resolved_config.txt").write_text(config_mod.dump_config(cfg))
    write_matrix(out / "policy.csv", run.policy)
    write_matrix(out / "qtable.csv", run.q)
    with open(out / "welfare_trajectory.csv", "w") as fh:
        fh.write("step,welfare\n")
        for i, w in enumerate(run.welfare_samples):
            fh.write(f"{(i + 1) * cfg.snapshot_interval},{_g(w)}\n")
    if run.cycle_policy is not None:
        write_matrix(out / "cycling_average_policy.csv", run.cycle_policy)
    with open(out / "result.txt", "w") as fh:
        fh.write(f"seed = {run.seed}\n")
        fh.write(f"converged = {run.converged}\n")
        fh.write(f"converged_at = {run.converged_at}\n")
        fh.write(f"steps_used = {run.steps_used}\n")
        fh.write(f"final_welfare = {_g(run.final_welfare)}\n")
        fh.write(f"sender_payoff = {_g(run.sender_payoff)}\n")
        fh.write(f"receiver_payoff = {_g(run.receiver_payoff)}\n")
        fh.write(f"connected = {run.connected}\n")
        fh.write(f"msfr = {run.msfr}\n")
        fh.write(f"saps = {run.saps}\n")
        fh.write(f"cycle_count = {run.cycle_count}\n")
        for w in run.warnings:
            fh.write(f"warning = {w}\n")
        if run.error:
            fh.write(f"error = {run.error.splitlines()[-1]}\n")
    return out


RUNS_HEADER = "seed,converged,steps,welfare,sender_payoff,receiver_payoff,connected,msfr,saps,cycle_count,error"


def write_batch_dir(batch: BatchResult, out_dir, force: bool = False, bins: int = 30) -> Path:
    out = ensure_dir(out_dir, force)
    cfg = batch.config
    (out / "resolved_config.txt").write_text(config_mod.dump_config(cfg))
    with open(out / "runs.csv", "w") as fh:
        fh.write(RUNS_HEADER + "\n")
        for r in batch.results:
            err = (r.error or "").splitlines()[-1] if r.error else ""
            fh.write(
                f"{r.seed},{int(r.converged)},{r.steps_used},{_g(r.final_welfare)},"
                f"{_g(r.sender_payoff)},{_g(r.receiver_payoff)},"
                f"{int(r.connected)},{int(r.msfr)},{int(r.saps)},{r.cycle_count},{err}\n"
            )
    edges, counts = welfare_histogram(batch, bins=bins)
    with open(out / "welfare_histogram.csv", "w") as fh:
        fh.write("bin_left,bin_right,count\n")
        for i, c in enumerate(counts):
            fh.write(f"{_g(edges[i])},{_g(edges[i + 1])},{int(c)}\n")
    median = batch.median_welfare_run()
    write_matrix(out / "median_policy.csv", median.policy)
    cyc = [r for r in batch.results if r.cycle_policy is not None]
    if cyc:
        write_matrix(out / "cycling_average_policy.csv", np.mean([r.cycle_policy for r in cyc], axis=0))
    for r in batch.results:
        write_run_dir(r, cfg, out / f"run_{r.seed}", force=force)
    return out


def write_bound_csv(reports, path) -> None:
    with _open_out(path) as fh:
        fh.write("k,n_hat,n_k,max_pool,u_plus,u_minus,u_brute,argmin_side_sizes\n")
        for r in reports:
            sizes = " ".join(str(s) for s in r.argmin_side_sizes)
            fh.write(
                f"{r.k},{_g(r.n_hat)},{r.n_k},{r.max_pool},{_g(r.u_lower_closed_plus)},"
                f"{_g(r.u_lower_closed_minus)},{_g(r.u_lower_brute)},{sizes}\n"
            )


def write_pbe_csv(entries, path) -> None:
    with _open_out(path) as fh:
        fh.write("sizes,sender_payoff,receiver_payoff,welfare,best\n")
        for i, e in enumerate(entries):
            sizes = " ".join(str(s) for s in e.sizes)
            fh.write(f"{sizes},{_g(e.sender_payoff)},{_g(e.receiver_payoff)},{_g(e.welfare)},{int(i == 0)}\n")


def write_ratio_csv(rows, path) -> None:
    with _open_out(path) as fh:
        fh.write("b,role,u_run,u_best_pbe,ratio\n")
        for r in rows:
            ratio = "" if r.ratio is None else _g(r.ratio)
            fh.write(f"{_g(r.b)},{r.role},{_g(r.u_run)},{_g(r.u_best_pbe)},{ratio}\n")


def write_sweep_csv(rows, path) -> None:
    with _open_out(path) as fh:
        fh.write("gamma,b,payoff,rescaled\n")
        for r in rows:
            fh.write(f"{_g(r.gamma)},{_g(r.b)},{_g(r.payoff)},{_g(r.rescaled)}\n")


def read_runs_csv(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append(dict(zip(header, parts)))
    return rows
