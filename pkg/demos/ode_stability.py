"""Rest points of the limiting flow and their stability.

Reproduces the three stability facts the simulations rely on: babbling
repels, the admissible worst case attracts, and under an effective bias no
rest point attracts at all.
"""

import numpy as np

from cheaptalk import dynamics
from cheaptalk.dynamics import OdeSystem
from cheaptalk.equilibria import Partition, partition_policy
from cheaptalk.game import StateGrid

grid = StateGrid.make(5)
sys = OdeSystem(grid=grid, b=0.0, tau=1e-3, epsilon=1e-2)

print("=== aligned interests (b = 0) ===")
rep = dynamics.find_rest_point(sys, dynamics.babbling_qtable(sys), tol=1e-9)
print(f"babbling: {rep.classification}, leading eigenvalue {np.max(np.real(rep.eigenvalues)):.2f}")

mu = partition_policy(Partition.from_sizes((2, 1, 2)))
rep_wc = dynamics.find_rest_point(sys, dynamics.consistent_qtable(mu, sys), tol=1e-10)
print(f"worst-case pools (2,1,2): {rep_wc.classification}, leading eigenvalue "
      f"{np.max(np.real(rep_wc.eigenvalues)):.2e}")

print("\nperturb the attractor by 1e-3 and integrate the flow:")
rng = np.random.default_rng(0)
q0 = rep_wc.point + rng.uniform(-1e-3, 1e-3, size=(5, 5))
traj = dynamics.integrate(sys, q0, t_end=200.0, h=1e-2, sample_every=40.0)
for t, point in zip(traj.times, traj.points):
    d = dynamics.policy_distance(dynamics.policy_of(point, sys), dynamics.policy_of(rep_wc.point, sys))
    print(f"  t={t:5.0f}: policy distance {d:.2e}")

print("\n=== effective bias (b = 0.2 > 1/(2(K-1)) = 0.125) ===")
sys_b = OdeSystem(grid=grid, b=0.2, tau=1e-3, epsilon=1e-2)
rng = np.random.default_rng(42)
labels = []
for _ in range(20):
    rep = dynamics.find_rest_point(sys_b, -rng.random((5, 5)) * 0.5, tol=1e-8, max_iter=5000)
    labels.append(rep.classification)
print(f"20 random rest-point searches: "
      f"{labels.count('attractor')} attractors, "
      f"{labels.count('linearly-unstable')} unstable, "
      f"{labels.count('inconclusive')} never settled")
