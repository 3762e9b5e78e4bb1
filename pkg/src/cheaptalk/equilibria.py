"""Pure-partition equilibrium machinery for the discrete cheap-talk game.

Policies that matter here are ordered partitions of the grid into
contiguous pools, each pool pooled on its own message.  This module
extracts pool structure from arbitrary policies, evaluates the structural
predicates (connected supports, fully revealing middle state, similar
adjacent pool sizes), enumerates all pure connected-pool perfect Bayesian
equilibria, and computes the worst-case welfare over admissible partitions
both in closed form and by exact search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from cheaptalk import game
from cheaptalk.game import StateGrid

#: pools in equilibrium can differ by at most this much before a boundary
#: state strictly prefers the neighbor; ties are equilibrium-admissible.
TIE_TOL = 1e-12

#: default support threshold for predicates on learned (softmax) policies;
#: sits far above the exploration floor and far below pooled-message mass.
SUPPORT_TOL = 1e-2

ENUMERATION_CAP = 31


class PoolStructureError(ValueError):
    """Policy support does not form an ordered contiguous partition."""

    def __init__(self, state: int, message: int, reason: str):
        self.state = state
        self.message = message
        super().__init__(f"{reason} (state {state}, message {message})")


class EnumerationCapError(ValueError):
    """Partition enumeration grows like 2^(K-1); refuse beyond the cap."""


@dataclass(frozen=True)
class Partition:
    """Ordered contiguous pools covering 0..k-1, as half-open index ranges."""

    k: int
    pools: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        pos = 0
        for start, stop in self.pools:
            if start != pos or stop <= start:
                raise ValueError(f"pools must be ordered, disjoint, contiguous: {self.pools}")
            pos = stop
        if pos != self.k:
            raise ValueError(f"pools cover {pos} states, expected {self.k}")

    @classmethod
    def from_sizes(cls, sizes, k: int | None = None) -> "Partition":
        sizes = tuple(int(s) for s in sizes)
        if k is None:
            k = sum(sizes)
        bounds = np.cumsum((0,) + sizes)
        return cls(k=k, pools=tuple((int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(stop - start for start, stop in self.pools)

    def pool_of(self, state: int) -> int:
        for i, (start, stop) in enumerate(self.pools):
            if start <= state < stop:
                return i
        raise IndexError(state)


def _supports(mu: np.ndarray, support_tol: float) -> list[np.ndarray]:
    mu = np.asarray(mu, dtype=float)
    return [np.flatnonzero(mu[:, m] > support_tol) for m in range(mu.shape[1])]


def is_connected(mu: np.ndarray, support_tol: float = SUPPORT_TOL) -> bool:
    """True iff every message's support is a contiguous index interval."""
    for supp in _supports(mu, support_tol):
        if supp.size >= 2 and supp[-1] - supp[0] != supp.size - 1:
            return False
    return True


def pool_structure(mu: np.ndarray, support_tol: float = SUPPORT_TOL) -> Partition:
    """Group states that share any message above the support threshold.

    Raises PoolStructureError naming the first gap if some message's
    support is not contiguous (the only way the sharing relation can fail
    to be an ordered partition).
    """
    mu = np.asarray(mu, dtype=float)
    k = mu.shape[0]
    for m, supp in enumerate(_supports(mu, support_tol)):
        if supp.size >= 2 and supp[-1] - supp[0] != supp.size - 1:
            inside = np.arange(supp[0], supp[-1] + 1)
            gap = int(inside[~np.isin(inside, supp)][0])
            raise PoolStructureError(gap, m, "message support has a gap")
    # contiguous supports: pools are maximal runs of states chained by overlap
    reach = np.arange(k)
    for supp in _supports(mu, support_tol):
        if supp.size:
            reach[supp[0] : supp[-1] + 1] = np.maximum(reach[supp[0] : supp[-1] + 1], supp[-1])
    pools = []
    start = 0
    while start < k:
        stop = reach[start]
        while True:
            upto = int(reach[start : stop + 1].max())
            if upto == stop:
                break
            stop = upto
        pools.append((int(start), int(stop) + 1))
        start = int(stop) + 1
    return Partition(k=k, pools=tuple(pools))


def is_msfr(mu: np.ndarray, grid: StateGrid, support_tol: float = SUPPORT_TOL) -> bool:
    """True iff no message used at the middle state is used anywhere else."""
    mid = grid.middle_index
    mu = np.asarray(mu, dtype=float)
    used_mid = np.flatnonzero(mu[mid] > support_tol)
    others = np.delete(np.arange(grid.k), mid)
    return not np.any(mu[np.ix_(others, used_mid)] > support_tol)


def is_saps(partition: Partition) -> bool:
    """True iff adjacent pool sizes differ by at most one state."""
    sizes = partition.sizes
    return all(abs(sizes[i + 1] - sizes[i]) <= 1 for i in range(len(sizes) - 1))


def partition_policy(partition: Partition, k: int | None = None) -> np.ndarray:
    """Pure policy sending each pool on the message of its lowest state."""
    k = partition.k if k is None else k
    mu = np.zeros((k, k))
    for start, stop in partition.pools:
        mu[start:stop, start] = 1.0
    return mu


def _pool_actions(partition: Partition, grid: StateGrid, epsilon: float) -> np.ndarray:
    """Posterior-mean action per pool under the exploration-mixed posterior."""
    y = np.empty(len(partition.pools))
    for i, (start, stop) in enumerate(partition.pools):
        n = stop - start
        mean = grid.states[start:stop].mean()
        y[i] = ((1 - epsilon) * n * mean + epsilon * 0.5) / ((1 - epsilon) * n + epsilon)
    return y


def partition_residual_variance(sizes, k: int) -> float:
    """Residual variance of a pure partition via per-pool discrete-uniform variance."""
    total = 0.0
    for n in sizes:
        total += n * (n * n - 1)
    return total / (12.0 * k * (k - 1) ** 2)


def partition_welfare(sizes, k: int) -> float:
    grid = game.StateGrid.make(k)
    return 1.0 - partition_residual_variance(sizes, k) / game.prior_variance(grid)


def _is_pbe(partition: Partition, grid: StateGrid, b: float, epsilon: float) -> bool:
    """Every state weakly prefers its own pool's action to every other pool's."""
    y = _pool_actions(partition, grid, epsilon)
    for i, (start, stop) in enumerate(partition.pools):
        for xi in range(start, stop):
            target = grid.states[xi] + b
            own = (target - y[i]) ** 2
            if np.any((target - y) ** 2 < own - TIE_TOL):
                return False
    return True


@dataclass(frozen=True)
class PbeEntry:
    partition: Partition
    sender_payoff: float
    receiver_payoff: float
    welfare: float

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.partition.sizes


def enumerate_pure_connected_pbe(
    k: int, b: float, epsilon: float = 0.0, cap: int = ENUMERATION_CAP
) -> list[PbeEntry]:
    """All ordered pool partitions whose boundary incentives hold.

    Search runs depth-first over pool sizes, pruning a prefix as soon as
    the two states at the last pool boundary would deviate; survivors get
    a full every-state-against-every-pool verification.  Entries are
    sorted by sender payoff, best first.
    """
    if k > cap:
        raise EnumerationCapError(
            f"pure-partition enumeration is exponential in K; K={k} exceeds the cap {cap}"
        )
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    grid = StateGrid.make(k)

    @lru_cache(maxsize=None)
    def action(start: int, stop: int) -> float:
        n = stop - start
        mean = grid.states[start:stop].mean()
        return ((1 - epsilon) * n * mean + epsilon * 0.5) / ((1 - epsilon) * n + epsilon)

    def boundary_ok(p_start: int, p_stop: int, q_stop: int) -> bool:
        # upper state of the lower pool and lower state of the upper pool
        y_lo = action(p_start, p_stop)
        y_hi = action(p_stop, q_stop)
        up = grid.states[p_stop - 1] + b
        lo = grid.states[p_stop] + b
        if (up - y_hi) ** 2 < (up - y_lo) ** 2 - TIE_TOL:
            return False
        if (lo - y_lo) ** 2 < (lo - y_hi) ** 2 - TIE_TOL:
            return False
        return True

    # At epsilon = 0 pool actions are pool means, strictly increasing, so
    # single-peaked preferences make the two boundary checks per adjacent
    # pair sufficient for every state; with exploration the pull toward 1/2
    # could in principle reorder actions, so survivors are re-verified.
    full_check = epsilon > 0.0
    found: list[PbeEntry] = []

    def extend(pools: list[tuple[int, int]], pos: int) -> None:
        if pos == k:
            partition = Partition(k=k, pools=tuple(pools))
            if full_check and not _is_pbe(partition, grid, b, epsilon):
                return
            mu = partition_policy(partition)
            mubar = game.explored_policy(mu, epsilon) if epsilon > 0 else mu
            resp = game.best_response(mubar, grid)
            found.append(
                PbeEntry(
                    partition=partition,
                    sender_payoff=game.expected_sender_payoff(mubar, resp.y, b, grid),
                    receiver_payoff=game.expected_receiver_payoff(mubar, resp.y, grid),
                    welfare=game.welfare(mu, epsilon, grid),
                )
            )
            return
        for stop in range(pos + 1, k + 1):
            if pools and not boundary_ok(pools[-1][0], pos, stop):
                continue
            pools.append((pos, stop))
            extend(pools, stop)
            pools.pop()

    extend([], 0)
    found.sort(key=lambda e: (-e.sender_payoff, e.sizes))
    return found


@dataclass(frozen=True)
class BoundReport:
    """Worst-case welfare over admissible partitions, bracketed two ways.

    u_lower_closed_plus comes from the infeasible strictly increasing pool
    sequence (underestimates welfare), u_lower_closed_minus from the
    feasible adapted sequence (overestimates), and u_lower_brute is the
    exact minimum over symmetric middle-singleton partitions with adjacent
    sizes differing by at most one.
    """

    k: int
    n_hat: float
    n_k: int
    max_pool: int
    u_lower_closed_plus: float
    u_lower_closed_minus: float
    u_lower_brute: float
    argmin_side_sizes: tuple[int, ...]
    argmin_partition: Partition


def _feasible_increasing_side(k: int) -> tuple[int, ...]:
    """Singletons, then pools growing by one up to the largest feasible size."""
    side = (k - 1) // 2
    m = max_pool_size(k)
    increasing = tuple(range(2, m + 1))
    lead = side - (m * (m + 1) // 2 - 1)
    assert lead >= 0
    return (1,) * lead + increasing


def n_hat(k: int) -> float:
    """Real solution of n(n+3)/2 = (K-1)/2; integer iff the strictly
    increasing pool sequence fits one side of the grid exactly."""
    return -1.5 + math.sqrt(1.25 + k)


def max_pool_size(k: int) -> int:
    return math.floor(n_hat(k) + 1.0)


@lru_cache(maxsize=None)
def _side_argmax(side: int) -> tuple[int, tuple[int, ...]]:
    """Maximize sum of N^3 - N over compositions of ``side`` whose first part
    is at most 2 and whose consecutive parts differ by at most 1.

    Exact dynamic program over (remaining, previous size); ties resolve to
    the lexicographically smallest sequence.
    """

    @lru_cache(maxsize=None)
    def best(rem: int, prev: int) -> tuple[int, tuple[int, ...]]:
        if rem == 0:
            return 0, ()
        top = -1
        arg: tuple[int, ...] = ()
        for s in range(max(1, prev - 1), min(rem, prev + 1) + 1):
            sub, tail = best(rem - s, s)
            cost = s * s * s - s + sub
            if cost > top:
                top, arg = cost, (s,) + tail
        return top, arg

    # middle pool is a singleton, so the innermost side pool is at most 2
    return best(side, 1)


def worst_case_bound(k: int, asymmetric: bool = False) -> BoundReport:
    """Closed-form brackets and the exact minimum welfare for odd ``k``.

    The search space is symmetric around the middle state with the middle
    fully revealing.  ``asymmetric=True`` audits that restriction by
    searching the two sides independently; the sides decouple, so it
    attains the same minimum with the left side's own argmin.
    """
    if k % 2 == 0:
        raise ValueError(f"worst-case bound requires odd K, got {k}")
    if k < 3:
        raise ValueError(f"worst-case bound requires K >= 3, got {k}")
    grid = StateGrid.make(k)
    pv = game.prior_variance(grid)
    nh = n_hat(k)
    nk = math.floor(nh)
    m = max_pool_size(k)

    # infeasible strictly increasing sequence 2..M+1 (one extra pool)
    resid_plus = ((nk + 2) * (nk + 3) / 2.0) ** 2 - 1.0
    resid_plus /= 6.0 * k * (k - 1) ** 2
    resid_plus -= 1.0 / (12.0 * k * (k - 1))
    u_plus = 1.0 - resid_plus / pv

    side_minus = _feasible_increasing_side(k)
    u_minus = partition_welfare(tuple(reversed(side_minus)) + (1,) + side_minus, k)

    if asymmetric:
        cost_left, left_arg = _side_argmax((k - 1) // 2)
        cost_right, side_arg = _side_argmax((k - 1) // 2)
        resid_brute = (cost_left + cost_right) / (12.0 * k * (k - 1) ** 2)
        sizes = tuple(reversed(left_arg)) + (1,) + side_arg
    else:
        cost, side_arg = _side_argmax((k - 1) // 2)
        resid_brute = (2 * cost) / (12.0 * k * (k - 1) ** 2)
        sizes = tuple(reversed(side_arg)) + (1,) + side_arg
    u_brute = 1.0 - resid_brute / pv
    return BoundReport(
        k=k,
        n_hat=nh,
        n_k=nk,
        max_pool=m,
        u_lower_closed_plus=u_plus,
        u_lower_closed_minus=u_minus,
        u_lower_brute=u_brute,
        argmin_side_sizes=side_arg,
        argmin_partition=Partition.from_sizes(sizes, k),
    )


def nu_decay_check(k_list) -> list[tuple[int, float, float]]:
    """Rows (K, 1 - U_K, K * (1 - U_K)) over the requested odd grid sizes."""
    rows = []
    for k in k_list:
        gap = 1.0 - worst_case_bound(k).u_lower_brute
        rows.append((k, gap, k * gap))
    return rows
