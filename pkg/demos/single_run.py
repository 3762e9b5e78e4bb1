"""One seeded learning run, from babbling to a pooled language.

Uses a small grid and a short horizon so it finishes in a few seconds;
the full workstation protocol is `desk_protocol()` with its defaults.
"""

import numpy as np

from cheaptalk import equilibria
from cheaptalk.harness import desk_protocol, run_simulation

cfg = desk_protocol(k=9, steps=1_000_000, n_runs=1, seed=12)
print("running K=9 for 1e6 steps from the babbling-consistent start...")
run = run_simulation(cfg, cfg.seed)

print(f"\nconverged: {run.converged} (at step {run.converged_at})")
print(f"final welfare: {run.final_welfare:.5f}")
print(f"sender payoff: {run.sender_payoff:.6f}   receiver payoff: {run.receiver_payoff:.6f}")
print(f"structure: connected={run.connected} msfr={run.msfr} saps={run.saps}")

w = run.welfare_samples
marks = [int(i) for i in (10, 100, 500) if i < len(w)] + [len(w) - 1]
print("\nwelfare along the trajectory:")
for i in marks:
    print(f"  step {1000 * (i + 1):>9,d}: {w[i]:.4f}")

print("\nfinal policy supports (state -> messages with mass > 1e-2):")
for x in range(cfg.k):
    supp = {int(m): round(float(run.policy[x, m]), 3) for m in np.flatnonzero(run.policy[x] > 1e-2)}
    print(f"  state {x}: {supp}")

part = equilibria.pool_structure(run.policy, 1e-2)
print(f"\npool sizes: {part.sizes}")
