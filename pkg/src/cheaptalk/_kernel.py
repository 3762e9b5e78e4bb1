"""Inner simulation loop, compiled with numba.

One source of truth: ``step_chunk`` is jitted for production and its
uncompiled ``py_func`` serves as the reference implementation; both consume
pre-drawn random streams, so their outputs agree bit for bit.

Per step the sender's softmax is refreshed incrementally: while the
temperature is still decaying every row changes, but entries more than
EXP_CUTOFF temperature-units below the row maximum underflow against the
row sum and are skipped (exp(-50) ~ 2e-22, below one ulp of the leading
term, so skipping is exact in double precision).  Once the temperature and
exploration floors are reached only the last-updated row is recomputed.
"""

from __future__ import annotations

import math

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap if not (args and callable(args[0])) else args[0]


EXP_CUTOFF = 50.0


@njit(cache=True, inline="always")
def _refresh_row(q, e_mat, rowsum, rowmax, r, inv_tau, tau):
    k = q.shape[1]
    rm = rowmax[r]
    thr = rm - EXP_CUTOFF * tau
    s = 0.0
    for m in range(k):
        v = q[r, m]
        if v > thr:
            ev = math.exp((v - rm) * inv_tau)
        else:
            ev = 0.0
        e_mat[r, m] = ev
        s += ev
    rowsum[r] = s


@njit(cache=True, inline="always")
def _refresh_all(q, e_mat, rowsum, rowmax, inv_tau, tau):
    for r in range(q.shape[0]):
        _refresh_row(q, e_mat, rowsum, rowmax, r, inv_tau, tau)


@njit(cache=True, inline="always")
def _posterior(e_mat, rowsum, grid, eps, m, k):
    num = 0.0
    den = 0.0
    for r in range(k):
        w = (1.0 - eps) * e_mat[r, m] / rowsum[r] + eps / k
        den += w
        num += w * grid[r]
    return num / den


@njit(cache=True, inline="always")
def _welfare(e_mat, rowsum, grid, eps, k, prior_var):
    resid = 0.0
    for m in range(k):
        num = 0.0
        den = 0.0
        for r in range(k):
            w = (1.0 - eps) * e_mat[r, m] / rowsum[r] + eps / k
            den += w
            num += w * grid[r]
        y = num / den
        for r in range(k):
            w = (1.0 - eps) * e_mat[r, m] / rowsum[r] + eps / k
            resid += w * (grid[r] - y) * (grid[r] - y)
    return 1.0 - resid / k / prior_var


def _step_chunk(
    q,
    n,
    rowmax,
    e_mat,
    rowsum,
    grid,
    xs,
    us,
    etas,
    recv_shocks,
    x_after,
    t0,
    steps,
    # schedules
    alpha_is_rm,
    alpha_const,
    rm_a,
    rm_c,
    tau0,
    tau_floor,
    gamma,
    eps0,
    eps_floor,
    eps_gamma,
    beta,
    sigma_eta,
    b,
    # receiver
    recv_learning,
    y_recv,
    recv_beta0,
    recv_p,
    recv_sigma,
    posts_buf,
    # snapshots / convergence / welfare
    snapshot_interval,
    prev_snap,
    snap_buf,
    delta_conv,
    conv_window_snaps,
    conv_start_step,
    conv_state,
    welfare_samples,
    snapshots_out,
    prior_var,
    # cycle tracking
    cycle_enabled,
    cycle_threshold,
    prev_mu,
    mu_buf,
    cycle_ring,
    cycle_state,
):
    k = q.shape[0]
    tau_prev = -1.0
    eps_prev = -1.0
    last_row = -1
    for i in range(steps):
        t = t0 + i
        tau = tau0 * math.exp(-gamma * t)
        if tau < tau_floor:
            tau = tau_floor
        eps = eps0 * math.exp(-eps_gamma * t)
        if eps < eps_floor:
            eps = eps_floor
        inv_tau = 1.0 / tau

        if tau == tau_prev and eps == eps_prev:
            if last_row >= 0:
                _refresh_row(q, e_mat, rowsum, rowmax, last_row, inv_tau, tau)
            full_refresh = False
        else:
            _refresh_all(q, e_mat, rowsum, rowmax, inv_tau, tau)
            full_refresh = True
        tau_prev = tau
        eps_prev = eps

        x = xs[i]

        # cycle tracking compares the policy before and after each update;
        # when only one row changed the sup-norm diff lives on that row
        if cycle_enabled:
            if full_refresh or i == 0:
                change = 0.0
                for r in range(k):
                    inv_s = 1.0 / rowsum[r]
                    for m in range(k):
                        v = e_mat[r, m] * inv_s
                        d = v - prev_mu[r, m]
                        if d < 0.0:
                            d = -d
                        if d > change:
                            change = d
                        mu_buf[r, m] = v
                for r in range(k):
                    for m in range(k):
                        prev_mu[r, m] = mu_buf[r, m]
            else:
                change = 0.0
                r = last_row
                inv_s = 1.0 / rowsum[r]
                for m in range(k):
                    v = e_mat[r, m] * inv_s
                    d = v - prev_mu[r, m]
                    if d < 0.0:
                        d = -d
                    if d > change:
                        change = d
                    prev_mu[r, m] = v
            if t > 0 and change > cycle_threshold:
                pos = cycle_state[1] % cycle_ring.shape[0]
                for r in range(k):
                    inv_s = 1.0 / rowsum[r]
                    for m in range(k):
                        cycle_ring[pos, r, m] = e_mat[r, m] * inv_s
                cycle_state[0] += 1
                cycle_state[1] = pos + 1

        # draw the message from the explored policy row
        u = us[i]
        acc = 0.0
        msg = k - 1
        inv_s = 1.0 / rowsum[x]
        for m in range(k):
            acc += (1.0 - eps) * e_mat[x, m] * inv_s + eps / k
            if u < acc:
                msg = m
                break

        # receiver action
        if recv_learning:
            for m in range(k):
                posts_buf[m] = _posterior(e_mat, rowsum, grid, eps, m, k)
            y_act = y_recv[msg]
        else:
            y_act = _posterior(e_mat, rowsum, grid, eps, msg, k)

        diff = y_act - grid[x] - b
        u_t = -diff * diff
        if sigma_eta > 0.0:
            u_t += sigma_eta * etas[i]

        # Q update on the visited pair, step size at the prior visit count
        if alpha_is_rm:
            alpha = rm_a / (n[x, msg] + rm_c)
        else:
            alpha = alpha_const
        n[x, msg] += 1
        cont = 0.0
        if beta > 0.0:
            nx = x_after if i == steps - 1 else xs[i + 1]
            cont = beta * rowmax[nx]
        old = q[x, msg]
        new = (1.0 - alpha) * old + alpha * (u_t + cont)
        q[x, msg] = new
        if new > rowmax[x]:
            rowmax[x] = new
        elif old == rowmax[x] and new < old:
            rm = q[x, 0]
            for m in range(1, k):
                if q[x, m] > rm:
                    rm = q[x, m]
            rowmax[x] = rm
        last_row = x

        # receiver learning update toward the pre-update posteriors
        if recv_learning:
            bt = recv_beta0 / (t + 1.0) ** recv_p
            if bt > 1.0:
                bt = 1.0
            for m in range(k):
                target = posts_buf[m]
                if recv_sigma > 0.0:
                    target += recv_sigma * recv_shocks[i, m]
                yv = (1.0 - bt) * y_recv[m] + bt * target
                if yv < -0.5:
                    yv = -0.5
                elif yv > 1.5:
                    yv = 1.5
                y_recv[m] = yv

        # snapshot bookkeeping after completing step t
        t1 = t + 1
        if t1 % snapshot_interval == 0:
            # policy snapshot reflects the updated table at the current tau
            _refresh_row(q, e_mat, rowsum, rowmax, x, inv_tau, tau)
            last_row = -1
            change = 0.0
            for r in range(k):
                inv_s = 1.0 / rowsum[r]
                for m in range(k):
                    v = e_mat[r, m] * inv_s
                    d = v - prev_snap[r, m]
                    if d < 0.0:
                        d = -d
                    if d > change:
                        change = d
                    snap_buf[r, m] = v
            for r in range(k):
                for m in range(k):
                    prev_snap[r, m] = snap_buf[r, m]
            snap_idx = t1 // snapshot_interval - 1
            welfare_samples[snap_idx] = _welfare(e_mat, rowsum, grid, eps, k, prior_var)
            if snapshots_out.shape[0] > 0:
                for r in range(k):
                    for m in range(k):
                        snapshots_out[snap_idx, r, m] = snap_buf[r, m]
            # convergence is only meaningful once the schedules sit at
            # their floors; mid-anneal quiet stretches do not count
            if t1 <= conv_start_step:
                conv_state[0] = 0
            elif change < delta_conv:
                conv_state[0] += 1
                if conv_state[0] >= conv_window_snaps:
                    conv_state[1] = t1
                    return i + 1, 1
            else:
                conv_state[0] = 0
    return steps, 0


step_chunk = njit(cache=True)(_step_chunk) if HAVE_NUMBA else _step_chunk
#: reference implementation: same source, interpreted; used by consistency tests
step_chunk_py = _step_chunk
