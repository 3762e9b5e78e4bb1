"""Command-line entry point.

Subcommands: simulate, batch, bound, enumerate, ode, report.  Exit codes:
0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from cheaptalk import dynamics, equilibria, io
from cheaptalk.config import ConfigError, build_config, parse_assignments, read_config_file
from cheaptalk.game import StateGrid
from cheaptalk.harness import run_batch, run_simulation

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _load_config(args):
    assignments = {}
    if getattr(args, "config", None):
        assignments.update(read_config_file(args.config))
    if getattr(args, "set", None):
        assignments.update(parse_assignments(args.set))
    cfg = build_config(assignments)
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    run = run_simulation(cfg, cfg.seed)
    out = io.write_run_dir(run, cfg, args.out, force=args.force)
    print(f"run written to {out} (welfare {run.final_welfare:.6f}, converged {run.converged})")
    return EXIT_OK


def cmd_batch(args) -> int:
    cfg = _load_config(args)
    io.ensure_dir(args.out, args.force)
    batch = run_batch(cfg, parallelism=args.parallel)
    out = io.write_batch_dir(batch, args.out, force=True)
    failures = [r for r in batch.results if r.error]
    print(
        f"batch written to {out}: {len(batch.results)} runs, "
        f"{batch.n_converged} converged, {len(failures)} failed"
    )
    return EXIT_RUNTIME if failures else EXIT_OK


def _parse_k_range(spec: str) -> list[int]:
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        return list(range(int(lo), int(hi) + 1, 2)) if int(lo) % 2 == 1 else list(range(int(lo) + 1, int(hi) + 1, 2))
    return [int(spec)]


def cmd_bound(args) -> int:
    ks = _parse_k_range(args.k)
    for k in ks:
        if k % 2 == 0:
            print(f"error: worst-case bound requires odd K, got {k}", file=sys.stderr)
            return EXIT_USAGE
    reports = [equilibria.worst_case_bound(k) for k in ks]
    if args.out:
        io.write_bound_csv(reports, args.out)
        print(f"bound table written to {args.out}")
    else:
        io.write_bound_csv(reports, sys.stdout)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    try:
        entries = equilibria.enumerate_pure_connected_pbe(args.k, args.b, args.epsilon)
    except equilibria.EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        io.write_pbe_csv(entries, args.out)
        print(f"{len(entries)} equilibria written to {args.out}")
    else:
        io.write_pbe_csv(entries, sys.stdout)
    return EXIT_OK


def cmd_ode(args) -> int:
    grid = StateGrid.make(args.k)
    sys_ = dynamics.OdeSystem(grid=grid, b=args.b, tau=args.tau, epsilon=args.epsilon)
    starts: list[tuple[str, np.ndarray]] = []
    for name in args.start:
        if name == "babbling":
            starts.append(("babbling", dynamics.babbling_qtable(sys_)))
        elif name == "worst-case":
            report = equilibria.worst_case_bound(args.k)
            mu = equilibria.partition_policy(report.argmin_partition)
            starts.append(("worst-case", dynamics.consistent_qtable(mu, sys_)))
        elif name.startswith("random:"):
            n = int(name.split(":", 1)[1])
            rng = np.random.default_rng(args.seed if args.seed is not None else 0)
            for i in range(n):
                starts.append((f"random-{i}", -rng.random((args.k, args.k))))
        else:
            print(f"error: unknown start {name!r}", file=sys.stderr)
            return EXIT_USAGE
    out = Path(args.out) if args.out else None
    if out is not None:
        io.ensure_dir(out, args.force)
    for name, q0 in starts:
        rep = dynamics.find_rest_point(sys_, q0, tol=args.tol, max_iter=args.max_iter)
        line = (
            f"{name}: {rep.classification} residual={rep.residual_norm:.3e} "
            f"iterations={rep.iterations} zero_subspace_dim={rep.zero_subspace_dim}"
        )
        print(line)
        if out is not None:
            io.write_matrix(out / f"rest_point_{name}.csv", rep.point)
            with open(out / f"rest_point_{name}.txt", "w") as fh:
                fh.write(line + "\n")
                if rep.eigenvalues is not None:
                    re_parts = np.sort(np.real(rep.eigenvalues))
                    fh.write(f"max_re = {re_parts[-1]!r}\nmin_re = {re_parts[0]!r}\n")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = io.read_runs_csv(Path(args.dir) / "runs.csv")
    if not rows:
        print("error: empty runs.csv", file=sys.stderr)
        return EXIT_RUNTIME
    welfares = np.array([float(r["welfare"]) for r in rows])
    conv = sum(int(r["converged"]) for r in rows)
    clean = sum(int(r["connected"]) and int(r["msfr"]) and int(r["saps"]) for r in rows)
    print(f"runs: {len(rows)}  converged: {conv}  connected+msfr+saps: {clean}")
    print(
        f"welfare: min {welfares.min():.6f}  median {np.median(welfares):.6f}  "
        f"max {welfares.max():.6f}"
    )
    print(f"sender payoff mean: {np.mean([float(r['sender_payoff']) for r in rows]):.6f}")
    print(f"receiver payoff mean: {np.mean([float(r['receiver_payoff']) for r in rows]):.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cheaptalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="path to a dotted-key config file")
        p.add_argument("--seed", type=int, help="base seed override")
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--force", action="store_true", help="allow writing into a populated directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override (repeatable)")

    p = sub.add_parser("simulate", help="one seeded run")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("batch", help="N seeded runs with aggregates")
    common(p)
    p.add_argument("--parallel", type=int, default=None, help="worker processes")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("bound", help="worst-case welfare bound table")
    p.add_argument("--k", required=True, help="odd K or range lo:hi")
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("enumerate", help="pure connected-pool equilibria")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("ode", help="rest-point search and stability report "
                       "(the flow has K^2 coordinates; K <= 9 recommended)")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--start", action="append", default=None,
                   help="babbling | worst-case | random:N (repeatable)")
    p.add_argument("--out", help="directory for rest-point records")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_ode)

    p = sub.add_parser("report", help="summarize a batch directory")
    p.add_argument("--dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "start", None) is None and args.command == "ode":
        args.start = ["babbling"]
    try:
        return args.func(args)
    except (ConfigError, FileExistsError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failures
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
