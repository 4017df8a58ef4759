"""Jitted event loops.

Each kernel simulates one replica with a private Philox stream and writes
into caller-allocated slices, so ensembles parallelize over replicas with
no shared mutable state; results are identical for any thread count.

Status codes returned by the partner-model kernel:
0 = reached t_max, 1 = stopped at extinction, 2 = stopped at the H floor,
3 = event budget exceeded, 4 = conservation check failed.

When a kernel stops early, the remaining sample slots are filled forward
with the terminal state and ``n_live`` reports how many samples were
genuinely reached.  After extinction the infection coordinates of the
filled samples are exact (the set I=J=K=0 is absorbing); the singles
count is frozen and must not be used past ``n_live``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange, uint32, uint64

from .rng import philox4x32

MAX_EVENTS_DEFAULT = np.int64(2**40)
_CONS_CHECK_MASK = np.int64(2**20 - 1)

STATUS_TMAX = 0
STATUS_EXTINCT = 1
STATUS_HFLOOR = 2
STATUS_EVENT_BUDGET = 3
STATUS_CONSERVATION = 4


@njit(inline="always")
def _two_unit(n, s_lo, s_hi, k0, k1):
    """Block n of the stream -> (open-(0,1] u, half-open [0,1) v)."""
    c0 = uint32(n & uint64(0xFFFFFFFF))
    c1 = uint32(n >> uint64(32))
    r0, r1, r2, r3 = philox4x32(c0, c1, s_lo, s_hi, k0, k1)
    a = (uint64(r1) << uint64(32)) | uint64(r0)
    b = (uint64(r3) << uint64(32)) | uint64(r2)
    u = (float(a >> uint64(11)) + 1.0) * (1.0 / 9007199254740992.0)
    v = float(b >> uint64(11)) * (1.0 / 9007199254740992.0)
    return u, v


@njit(cache=True)
def partner_kernel(
    S0,
    I0,
    J0,
    K0,
    L0,
    r_plus,
    r_minus,
    lam,
    N,
    t_max,
    sample_times,
    stop_on_extinction,
    h_floor_abs,
    s_lo,
    s_hi,
    k0,
    k1,
    y_star,
    gamma,
    eta,
    max_events,
    out_counts,
):
    """Exact direct-method simulation of one replica on the fast time scale.

    ``sample_times`` (fast units, sorted ascending, all <= t_max) are
    recorded with the state holding at that instant.  ``h_floor_abs`` stops
    the run when H = I + gamma*J + eta*K <= h_floor_abs (disabled if <= 0).
    """
    S = np.int64(S0)
    I = np.int64(I0)
    J = np.int64(J0)
    K = np.int64(K0)
    L = np.int64(L0)
    rpn = r_plus / N
    sqrt_n = math.sqrt(N)
    inv_sqrt_n = 1.0 / sqrt_n
    n_y_star = N * y_star

    t = 0.0
    n_events = np.int64(0)
    rng_n = uint64(0)
    n_samples = sample_times.shape[0]
    idx = 0

    tau0 = -1.0
    acc_zi = 0.0  # integral of z*i in fast time units
    z = (float(S + I) - n_y_star) * inv_sqrt_n
    i_sc = float(I) * inv_sqrt_n
    h_sc = (float(I) + gamma * float(J) + eta * float(K)) * inv_sqrt_n
    sup_absz = abs(z)
    t_sup_z = 0.0
    sup_h = h_sc
    t_sup_h = 0.0

    status = STATUS_TMAX
    while True:
        if I + J + K == 0 and tau0 < 0.0:
            tau0 = t
            if stop_on_extinction:
                status = STATUS_EXTINCT
                break
        if h_floor_abs > 0.0 and h_sc * sqrt_n <= h_floor_abs:
            status = STATUS_HFLOOR
            break

        # expressions kept operation-for-operation identical to
        # model_core.transition_rates so the reference path reproduces the
        # same floats and hence the same event sequence
        a0 = float(I)
        a1 = 2.0 * J
        a2 = lam * K
        a3 = rpn * I * (I - 1) * 0.5
        a4 = rpn * S * I
        a5 = rpn * S * (S - 1) * 0.5
        a6 = r_minus * J
        a7 = r_minus * K
        a8 = r_minus * L
        a9 = float(K)
        total = a0 + a1 + a2 + a3 + a4 + a5 + a6 + a7 + a8 + a9
        if total <= 0.0:
            # no feasible event (e.g. a lone single with everything else
            # impossible); the state holds forever
            break

        u, v = _two_unit(rng_n, s_lo, s_hi, k0, k1)
        rng_n += uint64(1)
        t_next = t - math.log(u) / total
        if t_next >= t_max:
            t_next = t_max

        while idx < n_samples and sample_times[idx] < t_next:
            out_counts[idx, 0] = S
            out_counts[idx, 1] = I
            out_counts[idx, 2] = J
            out_counts[idx, 3] = K
            out_counts[idx, 4] = L
            idx += 1
        acc_zi += z * i_sc * (t_next - t)
        t = t_next
        if t >= t_max:
            break

        # churn channels scanned first (they dominate); stated thresholds
        # match the reference scan order exactly
        r = v * total
        infection_changed = False
        if r < a5:  # S + S -> L
            S -= 2
            L += 1
            z -= 2.0 * inv_sqrt_n
        elif r < a5 + a8:  # L -> S + S
            L -= 1
            S += 2
            z += 2.0 * inv_sqrt_n
        else:
            infection_changed = True
            r -= a5 + a8
            if r < a0:  # I -> S
                I -= 1
                S += 1
            elif r < a0 + a1:  # J -> K
                J -= 1
                K += 1
            elif r < a0 + a1 + a2:  # K -> J
                K -= 1
                J += 1
            elif r < a0 + a1 + a2 + a3:  # I + I -> J
                I -= 2
                J += 1
            elif r < a0 + a1 + a2 + a3 + a4:  # S + I -> K
                S -= 1
                I -= 1
                K += 1
            elif r < a0 + a1 + a2 + a3 + a4 + a6:  # J -> I + I
                J -= 1
                I += 2
            elif r < a0 + a1 + a2 + a3 + a4 + a6 + a7:  # K -> S + I
                K -= 1
                S += 1
                I += 1
            else:  # K -> L
                K -= 1
                L += 1

        n_events += 1
        if n_events & _CONS_CHECK_MASK == 0:
            if S + I + 2 * (J + K + L) != N or min(S, min(I, min(J, min(K, L)))) < 0:
                status = STATUS_CONSERVATION
                break
            # re-derive the incrementally tracked z from the integer state,
            # killing any accumulated float drift
            z = (float(S + I) - n_y_star) * inv_sqrt_n
        if n_events >= max_events:
            status = STATUS_EVENT_BUDGET
            break

        if infection_changed:
            z = (float(S + I) - n_y_star) * inv_sqrt_n
            i_sc = float(I) * inv_sqrt_n
            h_sc = (float(I) + gamma * float(J) + eta * float(K)) * inv_sqrt_n
            if h_sc > sup_h:
                sup_h = h_sc
                t_sup_h = t
        if abs(z) > sup_absz:
            sup_absz = abs(z)
            t_sup_z = t

    # On a t_max (or frozen-state) exit the fill-forward below is the exact
    # state at the remaining sample times, so all samples are live.
    n_live = n_samples if status == STATUS_TMAX else idx
    while idx < n_samples:
        out_counts[idx, 0] = S
        out_counts[idx, 1] = I
        out_counts[idx, 2] = J
        out_counts[idx, 3] = K
        out_counts[idx, 4] = L
        idx += 1

    return (
        status,
        tau0,
        n_events,
        acc_zi / sqrt_n,
        sup_absz,
        t_sup_z,
        sup_h,
        t_sup_h,
        t,
        n_live,
        S,
        I,
        J,
        K,
        L,
    )


@njit(parallel=True, cache=True)
def partner_ensemble(
    init_counts,
    r_plus,
    r_minus,
    lam,
    N,
    t_max,
    sample_times,
    stop_on_extinction,
    h_floor_abs,
    stream_words,
    y_star,
    gamma,
    eta,
    max_events,
    counts,
    status,
    tau0,
    n_events,
    int_zi,
    sup_absz,
    t_sup_z,
    sup_h,
    t_sup_h,
    t_end,
    n_live,
    finals,
):
    n_rep = stream_words.shape[0]
    for r in prange(n_rep):
        res = partner_kernel(
            init_counts[0],
            init_counts[1],
            init_counts[2],
            init_counts[3],
            init_counts[4],
            r_plus,
            r_minus,
            lam,
            N,
            t_max,
            sample_times,
            stop_on_extinction,
            h_floor_abs,
            stream_words[r, 0],
            stream_words[r, 1],
            stream_words[r, 2],
            stream_words[r, 3],
            y_star,
            gamma,
            eta,
            max_events,
            counts[r],
        )
        status[r] = res[0]
        tau0[r] = res[1]
        n_events[r] = res[2]
        int_zi[r] = res[3]
        sup_absz[r] = res[4]
        t_sup_z[r] = res[5]
        sup_h[r] = res[6]
        t_sup_h[r] = res[7]
        t_end[r] = res[8]
        n_live[r] = res[9]
        finals[r, 0] = res[10]
        finals[r, 1] = res[11]
        finals[r, 2] = res[12]
        finals[r, 3] = res[13]
        finals[r, 4] = res[14]


@njit(cache=True)
def mfcp_kernel(X0, beta, N, t_max, sample_times, s_lo, s_hi, k0, k1, out_x):
    """Mean-field contact process: death rate k, birth rate beta*k*(1-k/N)."""
    X = np.int64(X0)
    t = 0.0
    rng_n = uint64(0)
    idx = 0
    n_samples = sample_times.shape[0]
    tau0 = -1.0
    if X == 0:
        tau0 = 0.0
    while X > 0:
        down = float(X)
        up = beta * X * (1.0 - X / N)
        total = down + up
        u, v = _two_unit(rng_n, s_lo, s_hi, k0, k1)
        rng_n += uint64(1)
        t_next = t - math.log(u) / total
        if t_next >= t_max:
            t_next = t_max
        while idx < n_samples and sample_times[idx] < t_next:
            out_x[idx] = X
            idx += 1
        t = t_next
        if t >= t_max:
            break
        if v * total < down:
            X -= 1
        else:
            X += 1
        if X == 0:
            tau0 = t
    while idx < n_samples:
        out_x[idx] = X
        idx += 1
    return tau0, X


@njit(parallel=True, cache=True)
def mfcp_ensemble(X0, beta, N, t_max, sample_times, stream_words, out_x, tau0, finals):
    for r in prange(stream_words.shape[0]):
        res = mfcp_kernel(
            X0,
            beta,
            N,
            t_max,
            sample_times,
            stream_words[r, 0],
            stream_words[r, 1],
            stream_words[r, 2],
            stream_words[r, 3],
            out_x[r],
        )
        tau0[r] = res[0]
        finals[r] = res[1]


@njit(cache=True)
def discrete_ou_kernel(m0, N, mu_z, sigma_z2, t_max, sample_times, s_lo, s_hi, k0, k1, out_z):
    """CTMC on the lattice 2*m/sqrt(N) with the symmetric OU-like rates.

    Rates are clipped at zero, which only matters far outside the regime of
    interest (|z| > sigma_z2*sqrt(N)/(2*mu_z)).
    """
    m = np.int64(m0)  # state is z = 2*m/sqrt(N)
    sqrt_n = math.sqrt(N)
    base = sigma_z2 * N / 8.0
    t = 0.0
    rng_n = uint64(0)
    idx = 0
    n_samples = sample_times.shape[0]
    while True:
        z = 2.0 * m / sqrt_n
        up = base - mu_z * sqrt_n * z / 4.0
        down = base + mu_z * sqrt_n * z / 4.0
        if up < 0.0:
            up = 0.0
        if down < 0.0:
            down = 0.0
        total = up + down
        if total <= 0.0:
            break
        u, v = _two_unit(rng_n, s_lo, s_hi, k0, k1)
        rng_n += uint64(1)
        t_next = t - math.log(u) / total
        if t_next >= t_max:
            t_next = t_max
        while idx < n_samples and sample_times[idx] < t_next:
            out_z[idx] = 2.0 * m / sqrt_n
            idx += 1
        t = t_next
        if t >= t_max:
            break
        if v * total < up:
            m += 1
        else:
            m -= 1
    z = 2.0 * m / sqrt_n
    while idx < n_samples:
        out_z[idx] = z
        idx += 1
    return z


@njit(parallel=True, cache=True)
def discrete_ou_ensemble(m0, N, mu_z, sigma_z2, t_max, sample_times, stream_words, out_z, finals):
    for r in prange(stream_words.shape[0]):
        finals[r] = discrete_ou_kernel(
            m0,
            N,
            mu_z,
            sigma_z2,
            t_max,
            sample_times,
            stream_words[r, 0],
            stream_words[r, 1],
            stream_words[r, 2],
            stream_words[r, 3],
            out_z[r],
        )


@njit(inline="always")
def _two_normals(n, s_lo, s_hi, k0, k1):
    u, v = _two_unit(n, s_lo, s_hi, k0, k1)
    r = math.sqrt(-2.0 * math.log(u))
    a = 2.0 * math.pi * v
    return r * math.cos(a), r * math.sin(a)


@njit(cache=True)
def em_kernel(x0, mu, sigma, dt, n_steps, sample_steps, s_lo, s_hi, k0, k1, out_x):
    """Full-truncation Euler-Maruyama for dX = -mu X^2 dt + sigma sqrt(X) dB.

    Absorbs at the first nonpositive step.  ``sample_steps`` are step
    indices (sorted); ``out_x`` receives X at those steps.  Returns the
    absorption time (or -1.0 if the path stayed positive).
    """
    x = x0
    sq_dt = math.sqrt(dt)
    tau0 = -1.0
    idx = 0
    n_samples = sample_steps.shape[0]
    rng_n = uint64(0)
    have_spare = False
    spare = 0.0
    if x <= 0.0:
        x = 0.0
        tau0 = 0.0
    for step in range(n_steps):
        while idx < n_samples and sample_steps[idx] <= step:
            out_x[idx] = x
            idx += 1
        if tau0 >= 0.0:
            break  # absorbed at 0; fill-forward below is exact
        xp = x if x > 0.0 else 0.0
        if have_spare:
            g = spare
            have_spare = False
        else:
            g, spare = _two_normals(rng_n, s_lo, s_hi, k0, k1)
            rng_n += uint64(1)
            have_spare = True
        x = x - mu * xp * xp * dt + sigma * math.sqrt(xp) * sq_dt * g
        if x <= 0.0:
            x = 0.0
            tau0 = (step + 1) * dt
    while idx < n_samples:
        out_x[idx] = x
        idx += 1
    return tau0, x


@njit(parallel=True, cache=True)
def em_ensemble(x0, mu, sigma, dt, n_steps, sample_steps, stream_words, out_x, tau0, finals):
    for r in prange(stream_words.shape[0]):
        res = em_kernel(
            x0,
            mu,
            sigma,
            dt,
            n_steps,
            sample_steps,
            stream_words[r, 0],
            stream_words[r, 1],
            stream_words[r, 2],
            stream_words[r, 3],
            out_x[r],
        )
        tau0[r] = res[0]
        finals[r] = res[1]
