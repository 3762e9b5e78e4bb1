"""Limiting-ODE analyzer for the Q-learning flow.

Two vector fields over K x K matrices: the Q-value flow
``mubar * (U(Q) - Q)`` whose rest points are payoff-consistent tables, and
the induced policy flow with entropy-perturbed payoffs ``u - tau log mu``
on the row simplices.  Rest points are located by damped fixed-point
iteration and classified by the eigenvalues of a finite-difference
Jacobian.  Scalar fixed-point machinery for the boundary-mixing weight
between unequal adjacent pools lives here too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from cheaptalk import game
from cheaptalk.game import StateGrid
from cheaptalk.qlearn import softmax_policy

ZERO_BAND = 1e-8
INSTABILITY_TOL = 1e-8


class IntegrationError(RuntimeError):
    """Trajectory left the admissible region."""


@dataclass(frozen=True)
class OdeSystem:
    grid: StateGrid
    b: float
    tau: float
    epsilon: float
    variant: str = "q-ode"

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ValueError(f"limiting temperature must be positive, got {self.tau}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"limiting exploration must lie in (0, 1), got {self.epsilon}")
        if self.variant not in ("q-ode", "policy-ode"):
            raise ValueError(f"unknown variant {self.variant!r}")


def payoff_matrix(mubar: np.ndarray, sys: OdeSystem) -> np.ndarray:
    """u(x, m) = -(x + b - y(m))^2 with y the posterior mean under ``mubar``."""
    resp = game.best_response(mubar, sys.grid)
    return -((sys.grid.states[:, None] + sys.b - resp.y[None, :]) ** 2)


def payoff_of_q(q: np.ndarray, sys: OdeSystem) -> tuple[np.ndarray, np.ndarray]:
    """(U(Q), mubar) for the softmax policy of ``q`` at the limiting parameters."""
    mubar = game.explored_policy(softmax_policy(q, sys.tau), sys.epsilon)
    return payoff_matrix(mubar, sys), mubar


def q_ode_rhs(q: np.ndarray, sys: OdeSystem) -> np.ndarray:
    u, mubar = payoff_of_q(np.asarray(q, dtype=float), sys)
    return mubar * (u - q)


def policy_ode_rhs(mu: np.ndarray, sys: OdeSystem) -> np.ndarray:
    """Replicator-style flow with entropy-perturbed payoffs; rows sum to 0.

    Accepts points slightly off the simplex (finite differencing needs the
    field in a neighborhood), but entries must be strictly positive for
    the entropy term.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 1e-300):
        raise ValueError("policy flow requires strictly interior policies")
    mubar = (1.0 - sys.epsilon) * mu + sys.epsilon / sys.grid.k
    uh = payoff_matrix(mubar, sys) - sys.tau * np.log(mu)
    avg = (mu * uh).sum(axis=1, keepdims=True)
    return mu * (uh - avg)


def _rhs(point: np.ndarray, sys: OdeSystem) -> np.ndarray:
    return q_ode_rhs(point, sys) if sys.variant == "q-ode" else policy_ode_rhs(point, sys)


def policy_of(point: np.ndarray, sys: OdeSystem) -> np.ndarray:
    """The policy a state of either variant induces."""
    return softmax_policy(point, sys.tau) if sys.variant == "q-ode" else np.asarray(point)


def policy_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray  # (n, K, K)

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]


def integrate(
    sys: OdeSystem,
    start: np.ndarray,
    t_end: float,
    h: float = 1e-2,
    sample_every: float = 1.0,
    halve_threshold: float | None = None,
    max_halvings: int = 8,
) -> Trajectory:
    """Classical fixed-step RK4.

    When ``halve_threshold`` is set, a step whose starting RHS sup-norm
    exceeds it is taken as repeated half-steps.  Policy-variant states must
    stay strictly inside the unit box or the run aborts.
    """
    point = np.array(start, dtype=float)
    if sys.variant == "policy-ode" and (np.any(point <= 0) or np.any(point >= 1)):
        raise IntegrationError("start is not interior")
    times = [0.0]
    samples = [point.copy()]
    t = 0.0
    next_sample = sample_every
    while t < t_end - 1e-12:
        step = min(h, t_end - t)
        r = _rhs(point, sys)
        if halve_threshold is not None:
            norm = float(np.abs(r).max())
            halvings = 0
            while norm * step > halve_threshold and halvings < max_halvings:
                step /= 2.0
                halvings += 1
        k1 = r
        k2 = _rhs(point + 0.5 * step * k1, sys)
        k3 = _rhs(point + 0.5 * step * k2, sys)
        k4 = _rhs(point + step * k3, sys)
        point = point + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += step
        if sys.variant == "policy-ode" and (np.any(point <= 0.0) or np.any(point >= 1.0)):
            bad = np.unravel_index(int(np.argmin(point)), point.shape)
            raise IntegrationError(f"policy left (0, 1) at t={t:.4f}, entry {bad}")
        if t >= next_sample - 1e-12 or t >= t_end - 1e-12:
            times.append(t)
            samples.append(point.copy())
            next_sample += sample_every
    return Trajectory(times=np.array(times), points=np.array(samples))


@dataclass(frozen=True)
class RestPointReport:
    point: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    eigenvalues: np.ndarray | None
    classification: str  # attractor | linearly-unstable | inconclusive
    zero_subspace_dim: int


def _fixed_point_map(point: np.ndarray, sys: OdeSystem) -> np.ndarray:
    if sys.variant == "q-ode":
        u, _ = payoff_of_q(point, sys)
        return u
    u = payoff_matrix(game.explored_policy(point, sys.epsilon), sys)
    # floor keeps iterates inside the flow's domain when the softmax
    # underflows; negligible against any representable rest point
    return np.maximum(softmax_policy(u, sys.tau), 1e-250)


def residual_norm(point: np.ndarray, sys: OdeSystem) -> float:
    return float(np.abs(_rhs(point, sys)).max())


def jacobian(sys: OdeSystem, point: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of the flow, flattened row-major to K^2.

    Policy-variant coordinates shrink the step to half the entry so the
    probed points stay strictly interior.
    """
    point = np.asarray(point, dtype=float)
    k2 = point.size
    jac = np.empty((k2, k2))
    flat = point.ravel()
    for j in range(k2):
        hj = h
        if sys.variant == "policy-ode":
            hj = min(h, 0.5 * flat[j])
        plus = flat.copy()
        minus = flat.copy()
        plus[j] += hj
        minus[j] -= hj
        fp = _rhs(plus.reshape(point.shape), sys).ravel()
        fm = _rhs(minus.reshape(point.shape), sys).ravel()
        jac[:, j] = (fp - fm) / (2.0 * hj)
    return jac


def classify_eigenvalues(
    eigenvalues: np.ndarray,
    instability_tol: float = INSTABILITY_TOL,
    zero_band: float = ZERO_BAND,
) -> tuple[str, int]:
    """Attractor / linearly-unstable / inconclusive, plus the neutral count.

    Eigenvalues with |Re| inside the zero band are neutral directions
    (payoff-equivalent message relabelings) and never decide the label.
    """
    re = np.real(eigenvalues)
    zero_dim = int(np.sum(np.abs(re) <= zero_band))
    if np.any(re > instability_tol):
        return "linearly-unstable", zero_dim
    if np.any(re < -zero_band):
        return "attractor", zero_dim
    return "inconclusive", zero_dim


def find_rest_point(
    sys: OdeSystem,
    start: np.ndarray,
    tol: float = 1e-8,
    damping: float = 0.5,
    max_iter: int = 20000,
    fd_step: float = 1e-6,
) -> RestPointReport:
    """Damped fixed-point iteration toward a rest point, then classify it.

    The map is a local contraction near attractors but can oscillate or
    diverge elsewhere; a search that fails to settle below ``tol`` is
    reported inconclusive with its last residual.
    """
    point = np.array(start, dtype=float)
    resid = residual_norm(point, sys)
    it = 0
    while resid > tol and it < max_iter:
        point = (1.0 - damping) * point + damping * _fixed_point_map(point, sys)
        it += 1
        if it % 16 == 0 or it == max_iter:
            resid = residual_norm(point, sys)
    resid = residual_norm(point, sys)
    if resid > tol:
        return RestPointReport(
            point=point,
            residual_norm=resid,
            converged=False,
            iterations=it,
            eigenvalues=None,
            classification="inconclusive",
            zero_subspace_dim=0,
        )
    eig = np.linalg.eigvals(jacobian(sys, point, h=fd_step))
    label, zero_dim = classify_eigenvalues(eig)
    return RestPointReport(
        point=point,
        residual_norm=resid,
        converged=True,
        iterations=it,
        eigenvalues=eig,
        classification=label,
        zero_subspace_dim=zero_dim,
    )


def consistent_qtable(mu: np.ndarray, sys: OdeSystem) -> np.ndarray:
    """Q-table equal to the payoffs ``mu`` itself induces.

    For a pure partition policy this is the natural smoothing seed: its
    softmax reproduces the partition with tail mass of order
    exp(-gap/tau) and lets indifferent states mix.
    """
    mubar = game.explored_policy(np.asarray(mu, dtype=float), sys.epsilon)
    return payoff_matrix(mubar, sys)


def smooth_policy(mu: np.ndarray, sys: OdeSystem) -> np.ndarray:
    """Interior softmax version of a (possibly pure) policy."""
    return softmax_policy(consistent_qtable(mu, sys), sys.tau)


def babbling_qtable(sys: OdeSystem) -> np.ndarray:
    """Payoff-consistent table of the babbling policy: exact rest point."""
    return consistent_qtable(game.babbling_policy(sys.grid.k), sys)


@dataclass(frozen=True)
class UnusedMessageReport:
    messages: tuple[int, ...]
    deviations: np.ndarray
    max_deviation: float
    degenerate: bool


def check_unused_message_posterior(
    mu: np.ndarray,
    epsilon: float,
    tau: float,
    grid: StateGrid,
    b: float = 0.0,
    unused_tol: float = 1e-3,
) -> UnusedMessageReport | None:
    """Max distance of unused-message posteriors from the prior mean 1/2.

    Unused means the message carries at most softmax-tail mass at every
    state.  A pure policy (exact zeros) is first smoothed through its
    payoff-consistent table at ``tau`` so tails exist; at epsilon = 0 the
    unused posteriors are degenerate and the deviation is 0 by convention.
    Returns None when no message qualifies.
    """
    mu = np.asarray(mu, dtype=float)
    unused = tuple(int(m) for m in np.flatnonzero(mu.max(axis=0) <= unused_tol))
    if not unused:
        return None
    if epsilon == 0.0:
        if np.all(mu[:, list(unused)] == 0.0):
            dev = np.zeros(len(unused))
            return UnusedMessageReport(unused, dev, 0.0, degenerate=True)
        mubar = mu
    else:
        eval_mu = mu
        if np.any(mu[:, list(unused)] == 0.0):
            sys = OdeSystem(grid=grid, b=b, tau=tau, epsilon=epsilon)
            eval_mu = smooth_policy(mu, sys)
        mubar = game.explored_policy(eval_mu, epsilon)
    resp = game.best_response(mubar, grid)
    dev = np.abs(resp.y[list(unused)] - 0.5)
    return UnusedMessageReport(unused, dev, float(dev.max()), degenerate=False)


@dataclass(frozen=True)
class SapsFixedPoint:
    mu_star: float
    delta_at_zero: float
    delta_at_fixed_point: float


def saps_fixed_point(
    m_size: int,
    k: int,
    epsilon: float,
    tau: float,
    start_index: int = 0,
) -> SapsFixedPoint:
    """Boundary mixing weight between adjacent pools of sizes M and M-2.

    The top state of the lower pool mixes onto the upper pool's message
    with weight mu solving mu = [1 + exp(Delta(mu)/tau)]^{-1}, where Delta
    compares the squared distances to the two pools' posterior actions.
    Solved by bisection on [0, 1/2].
    """
    if m_size < 3:
        raise ValueError(f"pool size must be at least 3, got {m_size}")
    if start_index < 0 or start_index + 2 * m_size - 2 > k:
        raise ValueError("pools do not fit the grid")
    grid = StateGrid.make(k)
    xbar = grid.states[start_index + m_size - 1]
    half_step = (m_size - 1) / (2.0 * (k - 1))

    def delta(mu: float) -> float:
        mass1 = m_size - 1 + mu
        mass2 = m_size - 1 - mu
        e1 = xbar - half_step * m_size / mass1
        e2 = xbar + half_step * (m_size - 2) / mass2
        v1 = (half_step * m_size / mass1 - epsilon * (0.5 - e1) / ((1 - epsilon) * mass1 + epsilon)) ** 2
        v2 = (half_step * (m_size - 2) / mass2 + epsilon * (0.5 - e2) / ((1 - epsilon) * mass2 + epsilon)) ** 2
        return v1 - v2

    def g(mu: float) -> float:
        return mu - float(expit(-delta(mu) / tau))

    lo, hi = 0.0, 0.5
    if not g(lo) < 0.0 < g(hi):
        raise ValueError(
            f"no sign change bracketed on [0, 0.5] for M={m_size}, K={k}, "
            f"eps={epsilon}, tau={tau}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    mu_star = 0.5 * (lo + hi)
    return SapsFixedPoint(
        mu_star=mu_star,
        delta_at_zero=delta(0.0),
        delta_at_fixed_point=delta(mu_star),
    )
