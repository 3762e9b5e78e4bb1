"""Tabular Boltzmann Q-learning sender.

The Q-table holds one payoff estimate per (state, message) pair.  Messages
are drawn from a softmax over the visited state's row, mixed with a uniform
exploration floor.  Temperature and exploration follow exponential-decay
schedules with strictly positive floors; step sizes are either constant or
Robbins-Monro in the per-pair visit count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cheaptalk.game import StateGrid, sender_payoff


@dataclass(frozen=True)
class Schedules:
    """Learning-rate, temperature, and exploration schedules.

    alpha_mode "constant" uses ``alpha`` at every visit; "robbins-monro"
    uses rm_a / (n + rm_c) where n counts prior visits of the updated pair,
    which satisfies the usual summability conditions by construction.
    Temperature decays as tau0 * exp(-gamma * t) down to tau_floor;
    exploration analogously (constant by default, eps_gamma = 0).
    """

    alpha_mode: str = "constant"
    alpha: float = 0.05
    rm_a: float = 1.0
    rm_c: float = 1.0
    tau0: float = 1.0
    tau_floor: float = 1e-4
    gamma: float = 1e-4
    eps0: float = 1e-3
    eps_floor: float = 1e-3
    eps_gamma: float = 0.0
    beta: float = 0.0

    def __post_init__(self) -> None:
        if self.alpha_mode not in ("constant", "robbins-monro"):
            raise ValueError(f"unknown alpha_mode {self.alpha_mode!r}")
        if self.alpha_mode == "constant" and not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"constant alpha must lie in (0, 1], got {self.alpha}")
        if self.rm_a <= 0 or self.rm_c <= 0:
            raise ValueError("robbins-monro parameters must be positive")
        if self.tau_floor <= 0:
            raise ValueError(f"tau_floor must be positive, got {self.tau_floor}")
        if self.tau0 < self.tau_floor:
            raise ValueError("tau0 must be at least tau_floor")
        if self.eps_floor <= 0 or self.eps_floor >= 1:
            raise ValueError(f"eps_floor must lie in (0, 1), got {self.eps_floor}")
        if self.eps0 < self.eps_floor or self.eps0 >= 1:
            raise ValueError("eps0 must lie in [eps_floor, 1)")
        if self.gamma < 0 or self.eps_gamma < 0:
            raise ValueError("decay rates must be nonnegative")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"discount beta must lie in [0, 1], got {self.beta}")

    def tau_at(self, t: int) -> float:
        return max(self.tau_floor, self.tau0 * math.exp(-self.gamma * t))

    def eps_at(self, t: int) -> float:
        return max(self.eps_floor, self.eps0 * math.exp(-self.eps_gamma * t))

    def alpha_at(self, n_prior: int) -> float:
        """Step size for a pair visited ``n_prior`` times before."""
        if self.alpha_mode == "constant":
            return self.alpha
        return self.rm_a / (n_prior + self.rm_c)


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian shock added to realized sender payoffs."""

    sigma_eta: float = 0.01

    def __post_init__(self) -> None:
        if not 0.0 <= self.sigma_eta < math.inf:
            raise ValueError(f"sigma_eta must be finite and nonnegative, got {self.sigma_eta}")


def softmax_policy(q: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise Boltzmann policy exp(Q/tau) / sum, with max-subtraction."""
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("Q-table contains non-finite entries")
    z = (q - q.max(axis=1, keepdims=True)) / tau
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def sample_message(x: int, mubar: np.ndarray, rng: np.random.Generator) -> int:
    """Draw a message index from row ``x`` of the explored policy."""
    row = np.asarray(mubar, dtype=float)[x]
    u = rng.random()
    return int(np.searchsorted(np.cumsum(row), u, side="right"))


def q_update(
    q: np.ndarray,
    x: int,
    m: int,
    u: float,
    x_next: int,
    sched: Schedules,
    n: np.ndarray,
) -> np.ndarray:
    """One Q-learning step on entry (x, m); returns a new table.

    The step size is taken at the pair's prior visit count, and ``n[x, m]``
    is incremented in place.  With beta = 0 the continuation term drops and
    the new entry is a convex combination of the old value and the payoff.
    """
    alpha = sched.alpha_at(int(n[x, m]))
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"step size must lie in (0, 1], got {alpha}")
    n[x, m] += 1
    q = np.array(q, dtype=float)
    cont = sched.beta * q[x_next].max() if sched.beta > 0 else 0.0
    q[x, m] = (1.0 - alpha) * q[x, m] + alpha * (u + cont)
    return q


def noisy_payoff(u: float, noise: NoiseSpec, rng: np.random.Generator) -> float:
    if noise.sigma_eta == 0.0:
        return u
    return u + noise.sigma_eta * rng.standard_normal()


def init_qtable(
    mode: str,
    grid: StateGrid,
    b: float = 0.0,
    delta_init: float = 1.0,
    custom: np.ndarray | None = None,
    constant: float = 0.0,
) -> np.ndarray:
    """Build an initial Q-table.

    "babbling-consistent": every entry equals the payoff of the prior-mean
    action, so rows are constant and the softmax is uniform at any
    temperature.  "full-revelation": zero on the diagonal, -delta_init off
    it, which concentrates the softmax on the diagonal message whenever
    delta_init is large against tau.  "constant": all entries equal.
    "custom": caller-supplied matrix.
    """
    k = grid.k
    if mode == "babbling-consistent":
        col = np.array([sender_payoff(x, 0.5, b) for x in grid.states])
        return np.tile(col[:, None], (1, k))
    if mode == "full-revelation":
        return delta_init * (np.eye(k) - 1.0)
    if mode == "constant":
        return np.full((k, k), float(constant))
    if mode == "custom":
        if custom is None:
            raise ValueError("custom init requires a matrix")
        q = np.array(custom, dtype=float)
        if q.shape != (k, k) or not np.all(np.isfinite(q)):
            raise ValueError(f"custom Q-table must be a finite {k}x{k} matrix")
        return q
    raise ValueError(f"unknown init mode {mode!r}")


def export_qtable_csv(q: np.ndarray, path) -> None:
    """K x K CSV at full double precision."""
    np.savetxt(path, np.asarray(q, dtype=float), delimiter=",", fmt="%.17g")
