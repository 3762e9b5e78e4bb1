"""Discretized quadratic cheap-talk game.

State and message space are the same uniform grid on [0, 1].  A sender
policy is a row-stochastic K x K matrix ``mu[x, m]``; exploration mixes it
with the uniform distribution.  The receiver best-responds with the
posterior mean of the state given the message.  Everything here is a pure
function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class StateGrid:
    """Uniform grid of ``k`` states spanning [0, 1] with spacing 1/(k-1)."""

    k: int
    states: np.ndarray

    @classmethod
    def make(cls, k: int) -> "StateGrid":
        if k < 2:
            raise ValueError(f"grid needs at least 2 states, got k={k}")
        states = np.arange(k, dtype=float) / (k - 1)
        return cls(k=k, states=states)

    @property
    def spacing(self) -> float:
        return 1.0 / (self.k - 1)

    @property
    def middle_index(self) -> int:
        """Index of the state 1/2; only defined for odd k."""
        self.require_odd()
        return self.k // 2

    def require_odd(self) -> None:
        if self.k % 2 == 0:
            raise ValueError(f"operation requires an odd number of states, got k={self.k}")


def bias_threshold(k: int) -> float:
    """Smallest bias that separates incentives from the aligned case: 1/(2(k-1))."""
    return 1.0 / (2.0 * (k - 1))


def is_effective_bias(b: float, k: int) -> bool:
    return b > bias_threshold(k)


def sender_payoff(x: float, y: float, b: float) -> float:
    """Quadratic loss around the biased target: -(y - x - b)^2."""
    return -((y - x - b) ** 2)


def receiver_payoff(x: float, y: float) -> float:
    """Quadratic loss around the state: -(y - x)^2."""
    return -((y - x) ** 2)


def validate_policy(mu: np.ndarray, k: int | None = None) -> None:
    """Raise ValueError unless ``mu`` is a row-stochastic square matrix."""
    mu = np.asarray(mu)
    if mu.ndim != 2 or mu.shape[0] != mu.shape[1]:
        raise ValueError(f"policy must be a square matrix, got shape {mu.shape}")
    if k is not None and mu.shape[0] != k:
        raise ValueError(f"policy has {mu.shape[0]} rows, expected {k}")
    if not np.all(np.isfinite(mu)):
        raise ValueError("policy contains non-finite entries")
    if np.any(mu < -ROW_SUM_TOL) or np.any(mu > 1.0 + ROW_SUM_TOL):
        raise ValueError("policy entries must lie in [0, 1]")
    rs = mu.sum(axis=1)
    bad = np.abs(rs - 1.0) > ROW_SUM_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"policy row {i} sums to {rs[i]!r}, not 1")


def babbling_policy(k: int) -> np.ndarray:
    """All rows uniform: messages carry no information."""
    return np.full((k, k), 1.0 / k)


def revealing_policy(k: int) -> np.ndarray:
    """Identity matrix: each state gets its own message."""
    return np.eye(k)


def explored_policy(mu: np.ndarray, epsilon: float) -> np.ndarray:
    """Mix ``mu`` with the uniform distribution: (1-eps) * mu + eps / K."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    mu = np.asarray(mu, dtype=float)
    validate_policy(mu)
    k = mu.shape[0]
    return (1.0 - epsilon) * mu + epsilon / k


@dataclass(frozen=True)
class ReceiverResponse:
    """Posterior-mean action per message, with a flag for zero-mass messages."""

    y: np.ndarray
    degenerate: np.ndarray  # bool per message; True where the prior mean was substituted


def posterior_mean(mubar: np.ndarray, m: int, grid: StateGrid) -> tuple[float, bool]:
    """E[X | m] under a uniform prior and play distribution ``mubar``.

    A message with exactly zero total probability (possible only at eps = 0)
    gets the prior mean 1/2 and is flagged degenerate.
    """
    mubar = np.asarray(mubar, dtype=float)
    col = mubar[:, m]
    total = col.sum()
    if total == 0.0:
        return 0.5, True
    return float(grid.states @ col / total), False


def best_response(mubar: np.ndarray, grid: StateGrid) -> ReceiverResponse:
    """Posterior mean for every message; vectorized form of ``posterior_mean``."""
    mubar = np.asarray(mubar, dtype=float)
    totals = mubar.sum(axis=0)
    num = grid.states @ mubar
    degenerate = totals == 0.0
    y = np.where(degenerate, 0.5, num / np.where(degenerate, 1.0, totals))
    return ReceiverResponse(y=y, degenerate=degenerate)


def expected_sender_payoff(mu_play: np.ndarray, y: np.ndarray, b: float, grid: StateGrid) -> float:
    """Average sender payoff when play follows ``mu_play`` and the receiver acts ``y``."""
    mu_play = np.asarray(mu_play, dtype=float)
    loss = (y[None, :] - grid.states[:, None] - b) ** 2
    return float(-(mu_play * loss).sum() / grid.k)


def expected_receiver_payoff(mu_play: np.ndarray, y: np.ndarray, grid: StateGrid) -> float:
    return expected_sender_payoff(mu_play, y, 0.0, grid)


def prior_variance(grid: StateGrid) -> float:
    """Variance of the uniform prior on the grid: (1/12) (K+1)/(K-1)."""
    return (grid.k + 1) / (grid.k - 1) / 12.0


def residual_variance(mu: np.ndarray, epsilon: float, grid: StateGrid) -> float:
    """E[(X - E[X|m])^2] under the exploration-mixed play distribution."""
    mubar = explored_policy(mu, epsilon) if epsilon > 0.0 else np.asarray(mu, dtype=float)
    resp = best_response(mubar, grid)
    dev = (grid.states[:, None] - resp.y[None, :]) ** 2
    return float((mubar * dev).sum() / grid.k)


def welfare(mu: np.ndarray, epsilon: float, grid: StateGrid) -> float:
    """Normalized informativeness: 1 - residual variance / prior variance.

    0 at babbling, 1 at full revelation with no exploration.  When
    ``epsilon > 0`` the joint distribution of state and message is the
    exploration-mixed one, matching what the receiver actually faces.
    """
    return 1.0 - residual_variance(mu, epsilon, grid) / prior_variance(grid)
