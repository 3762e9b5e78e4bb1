"""Worst-case welfare bounds and equilibrium enumeration, end to end.

Walks the grid sizes used in the simulation studies: closed-form brackets,
the exact minimum over admissible partitions, and the equilibrium tables
the payoff-ratio comparisons are built on.
"""

import numpy as np

from cheaptalk import equilibria, game
from cheaptalk.equilibria import enumerate_pure_connected_pbe, worst_case_bound
from cheaptalk.game import StateGrid

print("=== Worst-case welfare over admissible partitions ===")
for k in (5, 19, 21, 101):
    r = worst_case_bound(k)
    print(
        f"K={k:3d}: n_hat={r.n_hat:6.3f}  largest pool M={r.max_pool}  "
        f"U+={r.u_lower_closed_plus:.5f} <= U_K={r.u_lower_brute:.5f} <= U-={r.u_lower_closed_minus:.5f}"
        f"   worst side sizes {r.argmin_side_sizes}"
    )

print("\nScaled welfare gap K*(1-U_K) stays bounded as the grid refines:")
rows = equilibria.nu_decay_check([5, 21, 51, 101, 201])
for k, gap, scaled in rows:
    print(f"  K={k:3d}: 1-U_K = {gap:.5f}   K*(1-U_K) = {scaled:.4f}")

print("\n=== The worst-case policy is itself an equilibrium ===")
r21 = worst_case_bound(21)
mu = equilibria.partition_policy(r21.argmin_partition)
g = StateGrid.make(21)
print(f"partition sizes: {r21.argmin_partition.sizes}")
print(f"welfare of the induced policy: {game.welfare(mu, 0.0, g):.5f}")
print(f"connected: {equilibria.is_connected(mu, 1e-6)}")
print(f"middle state fully revealing: {equilibria.is_msfr(mu, g, 1e-6)}")
print(f"similar adjacent pool sizes: {equilibria.is_saps(r21.argmin_partition)}")

print("\n=== Equilibrium tables under preference disagreement ===")
for b in (0.1, 0.2):
    entries = enumerate_pure_connected_pbe(21, b, 0.0)
    print(f"b={b}: {len(entries)} pure connected-pool equilibria")
    for e in entries:
        print(
            f"   sizes {str(e.sizes):18s} sender {e.sender_payoff: .5f} "
            f"receiver {e.receiver_payoff: .5f}  welfare {e.welfare:.4f}"
        )
    print(f"   -> best sender payoff {entries[0].sender_payoff:.5f} is the comparison baseline")
