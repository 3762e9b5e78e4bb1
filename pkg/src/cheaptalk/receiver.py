"""Receiver behavior.

Exact mode recomputes the Bayesian best response to the sender's current
explored policy every period.  Learning mode tracks it with a faster
stochastic-approximation iterate per message, which is only sound when the
sender's step sizes vanish relative to the receiver's.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from cheaptalk.game import ReceiverResponse, StateGrid, best_response, explored_policy
from cheaptalk.qlearn import Schedules, softmax_policy

Y_CLAMP = (-0.5, 1.5)


@dataclass(frozen=True)
class ReceiverState:
    """Receiver mode plus, in learning mode, the current action estimates.

    beta_t = beta0 / (t+1)^p with p in (0.5, 1].  The shock added to each
    update is Gaussian with standard deviation sigma_r; estimates are
    clamped to a fixed interval so payoffs stay bounded.
    """

    mode: str = "exact"
    y: np.ndarray | None = None
    beta0: float = 1.0
    p: float = 0.6
    sigma_r: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "learning"):
            raise ValueError(f"unknown receiver mode {self.mode!r}")
        if self.mode == "learning":
            if not 0.5 < self.p <= 1.0:
                raise ValueError(f"receiver exponent p must lie in (0.5, 1], got {self.p}")
            if self.beta0 <= 0:
                raise ValueError("beta0 must be positive")
            if self.sigma_r < 0:
                raise ValueError("sigma_r must be nonnegative")

    def beta_at(self, t: int) -> float:
        return min(1.0, self.beta0 / (t + 1) ** self.p)


def initial_receiver_state(mode: str, grid: StateGrid, **kwargs) -> ReceiverState:
    """Learning mode starts every message at the prior mean."""
    y = np.full(grid.k, 0.5) if mode == "learning" else None
    return ReceiverState(mode=mode, y=y, **kwargs)


def check_timescales(sched: Schedules, state: ReceiverState) -> list[str]:
    """Validate that the sender updates slower than the receiver.

    Robbins-Monro sender steps decay like 1/t, so any p < 1 works and p = 1
    is rejected (the ratio would not vanish).  Constant sender steps never
    satisfy the ratio condition; that pairing is allowed as an experiment
    mode and recorded as a warning.
    """
    if state.mode != "learning":
        return []
    if sched.alpha_mode == "constant":
        msg = (
            "constant sender step size with a learning receiver: the "
            "two-timescale ratio alpha_t/beta_t does not vanish; "
            "experiment mode, asymptotic guarantees do not apply"
        )
        warnings.warn(msg)
        return [msg]
    if state.p == 1.0:
        raise ValueError(
            "robbins-monro sender steps decay like 1/t; receiver exponent "
            "p=1 makes alpha_t/beta_t non-vanishing"
        )
    return []


def respond_exact(mubar: np.ndarray, grid: StateGrid) -> ReceiverResponse:
    """Best response to the current explored policy (delegates to the game)."""
    return best_response(mubar, grid)


def exact_posterior_given_q(
    q: np.ndarray, tau: float, epsilon: float, grid: StateGrid
) -> np.ndarray:
    """Posterior-mean vector induced by the softmax of ``q`` with exploration."""
    mubar = explored_policy(softmax_policy(q, tau), epsilon)
    return best_response(mubar, grid).y


def respond_learning_step(
    state: ReceiverState,
    q: np.ndarray,
    tau: float,
    epsilon: float,
    t: int,
    rng: np.random.Generator | None,
    grid: StateGrid,
) -> ReceiverState:
    """Move every message's estimate toward the exact posterior given Q.

    y_{t+1}(m) = (1 - beta_t) y_t(m) + beta_t (y(m, Q_t) + R), with R a
    zero-mean Gaussian shock.  Estimates are clamped to keep payoffs
    bounded under arbitrary shock realizations.
    """
    if state.mode != "learning":
        raise ValueError("respond_learning_step requires learning mode")
    target = exact_posterior_given_q(q, tau, epsilon, grid)
    if state.sigma_r > 0:
        if rng is None:
            raise ValueError("sigma_r > 0 requires a generator")
        target = target + state.sigma_r * rng.standard_normal(grid.k)
    beta = state.beta_at(t)
    y = (1.0 - beta) * state.y + beta * target
    np.clip(y, Y_CLAMP[0], Y_CLAMP[1], out=y)
    return replace(state, y=y)
