"""Misaligned interests: no convergence, persistent cycling, and payoffs
above the best static equilibrium.

Desk-sized version (fewer seeds, shorter horizon than the batch protocol).
"""

import numpy as np

from cheaptalk.harness import desk_protocol, payoff_ratio_report, run_batch

cfg = desk_protocol(b=0.1, steps=2_000_000, n_runs=4, seed=2000)
print("running 4 seeds at K=21, b=0.1 ...")
batch = run_batch(cfg)

for r in batch.results:
    print(f"  seed {r.seed}: converged={r.converged}  cycling iterations={r.cycle_count:,}  "
          f"welfare={r.final_welfare:.4f}")

rows = payoff_ratio_report([batch])
print("\npayoff comparison against the best pure connected-pool equilibrium:")
for row in rows:
    print(f"  {row.role:8s}: average {row.u_run: .5f} vs best equilibrium {row.u_best_pbe: .5f}"
          f"   ratio D = {row.ratio:+.3f}")

cyc = [r.cycle_policy for r in batch.results if r.cycle_policy is not None]
if cyc:
    avg = np.mean(cyc, axis=0)
    print("\ncycling-average policy, argmax message per state (top pool is stable,")
    print("lower states rotate through the escalator):")
    print("  " + " ".join(f"{int(m):2d}" for m in avg.argmax(axis=1)))
