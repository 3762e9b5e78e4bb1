"""Cheap-talk learning toolkit.

A tabular Boltzmann Q-learning sender plays a discretized quadratic
cheap-talk game against a Bayesian best-responding receiver.  Modules
cover the game primitives, the learner, the limiting-ODE stability
analyzer, equilibrium enumeration with worst-case welfare bounds, and a
seeded batch experiment harness.
"""

from cheaptalk.game import StateGrid, welfare
from cheaptalk.harness import ExperimentConfig, desk_protocol, run_batch, run_simulation
from cheaptalk.equilibria import enumerate_pure_connected_pbe, worst_case_bound

__all__ = [
    "StateGrid",
    "welfare",
    "ExperimentConfig",
    "desk_protocol",
    "run_simulation",
    "run_batch",
    "enumerate_pure_connected_pbe",
    "worst_case_bound",
]
__version__ = "0.1.0"
