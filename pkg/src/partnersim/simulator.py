"""Exact event-driven simulation of the partner model.

Time conventions: configuration is expressed on the slow (sqrt(N)) time
scale, simulation runs on the fast (original) scale internally, recorded
samples carry slow-scale stamps.  A sample at grid time t is the state
holding at that instant.

Randomness: a single 64-bit master seed; replica r simulates on the Philox
stream ``master ^ splitmix64(r)`` (see :mod:`partnersim.rng`), so ensembles
are reproducible bit-for-bit at any degree of parallelism and a single
:func:`run` is replica 0 of its own seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .analytics import CriticalStructure
from .model_core import ModelParams, PopulationState
from .rng import PhiloxStream, stream_id, stream_words

STOP_REASONS = {
    _kernels.STATUS_TMAX: "t_max",
    _kernels.STATUS_EXTINCT: "extinction",
    _kernels.STATUS_HFLOOR: "h_floor",
    _kernels.STATUS_EVENT_BUDGET: "event_budget",
    _kernels.STATUS_CONSERVATION: "conservation_failure",
}


class ConfigurationError(ValueError):
    """Initial condition or config is infeasible."""


@dataclass(frozen=True)
class InitialCondition:
    mode: str
    x: float = 0.0
    counts: tuple[int, int, int, int, int] | None = None
    i0: int = 0
    z0: float = 0.0

    @staticmethod
    def on_ray(x: float, z0: float = 0.0) -> "InitialCondition":
        """(i, j, k) ~ (alpha, beta, 1)*x with the singles count at
        N*y_star + z0*sqrt(N)."""
        return InitialCondition(mode="on_ray", x=x, z0=z0)

    @staticmethod
    def explicit(S: int, I: int, J: int, K: int, L: int) -> "InitialCondition":
        return InitialCondition(mode="explicit", counts=(S, I, J, K, L))

    @staticmethod
    def all_susceptible_plus(i0: int) -> "InitialCondition":
        """i0 infected singles, everyone else a single susceptible."""
        return InitialCondition(mode="all_susceptible_plus", i0=i0)

    @staticmethod
    def infected_singles_only(x: float, z0: float = 0.0) -> "InitialCondition":
        """Off-ray start: I = round(x*sqrt(N)), J = K = 0, singles at
        equilibrium.  Used by the state-space-collapse experiments."""
        return InitialCondition(mode="i_only", x=x, z0=z0)


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    init: InitialCondition
    t_max_slow: float
    record_grid_slow: float = 0.01
    stop_on_extinction: bool = True
    h_floor: float = 0.0  # stop when h <= h_floor (H <= h_floor*sqrt(N)); 0 disables
    seed: int = 0
    max_events: int = int(_kernels.MAX_EVENTS_DEFAULT)

    def __post_init__(self):
        if not (self.t_max_slow > 0 and self.record_grid_slow > 0):
            raise ConfigurationError("t_max_slow and record_grid_slow must be positive")


def _pack_state(I: int, J: int, K: int, y_target: float, params: ModelParams) -> PopulationState:
    """Fill S and L around given infection counts with Y ~ y_target.

    N - Y - 2*(J+K) must be even to split into L pairs; parity is repaired
    by moving one individual between S and the L pool (Y -> Y - 1), or
    Y -> Y + 1 if that is infeasible.
    """
    N = params.N
    Y = int(round(y_target))
    rem = N - Y - 2 * (J + K)
    if rem % 2 != 0:
        if Y - I >= 1:
            Y -= 1
        else:
            Y += 1
        rem = N - Y - 2 * (J + K)
    S = Y - I
    L = rem // 2
    if S < 0 or L < 0:
        raise ConfigurationError(
            f"infeasible initial condition: S={S}, L={L} for N={N}, I={I}, J={J}, K={K}"
        )
    state = PopulationState(S=S, I=I, J=J, K=K, L=L)
    state.validate(N)
    return state


def build_initial_state(
    init: InitialCondition, params: ModelParams, crit: CriticalStructure
) -> PopulationState:
    N = params.N
    sqrt_n = math.sqrt(N)
    if init.mode == "explicit":
        state = PopulationState(*init.counts)
        if state.total != N:
            raise ConfigurationError(
                f"explicit counts violate conservation: total {state.total} != N {N}"
            )
        return state
    if init.mode == "all_susceptible_plus":
        if not (0 <= init.i0 <= N):
            raise ConfigurationError(f"i0={init.i0} outside [0, N]")
        return PopulationState(S=N - init.i0, I=init.i0, J=0, K=0, L=0)
    if init.mode == "on_ray":
        I = int(round(crit.alpha * init.x * sqrt_n))
        J = int(round(crit.beta * init.x * sqrt_n))
        K = int(round(init.x * sqrt_n))
        return _pack_state(I, J, K, N * crit.y_star + init.z0 * sqrt_n, params)
    if init.mode == "i_only":
        I = int(round(init.x * sqrt_n))
        return _pack_state(I, 0, 0, N * crit.y_star + init.z0 * sqrt_n, params)
    raise ConfigurationError(f"unknown initial-condition mode {init.mode!r}")


def observable_frame(counts: np.ndarray, params: ModelParams, crit: CriticalStructure) -> dict:
    """Vectorized observables for an (n, 5) array of count rows.

    U, V, W, Q are NaN where H = 0.
    """
    counts = np.asarray(counts)
    N = params.N
    sqrt_n = math.sqrt(N)
    S = counts[..., 0].astype(np.float64)
    I = counts[..., 1].astype(np.float64)
    J = counts[..., 2].astype(np.float64)
    K = counts[..., 3].astype(np.float64)
    Y = S + I
    H = I + crit.gamma * J + crit.eta * K
    with np.errstate(divide="ignore", invalid="ignore"):
        U = np.where(H > 0, I / H, np.nan)
        V = np.where(H > 0, crit.gamma * J / H, np.nan)
        W = np.where(H > 0, crit.eta * K / H, np.nan)
    Q = crit.theta2 * (U - crit.u_star) ** 2 + crit.theta1 * (V - crit.v_star) ** 2
    return {
        "y": Y / N,
        "z": (Y - N * crit.y_star) / sqrt_n,
        "i": I / sqrt_n,
        "j": J / sqrt_n,
        "k": K / sqrt_n,
        "h": H / sqrt_n,
        "H": H,
        "U": U,
        "V": V,
        "W": W,
        "Q": Q,
    }


@dataclass(frozen=True)
class TerminalInfo:
    stop_reason: str
    tau0_slow: float | None
    n_events: int
    t_end_slow: float
    n_live_samples: int
    sup_abs_z: float
    t_sup_z_slow: float
    sup_h: float
    t_sup_h_slow: float
    int_zi_slow: float
    final_counts: tuple[int, int, int, int, int]


@dataclass(frozen=True)
class Trajectory:
    t_slow: np.ndarray
    counts: np.ndarray  # (n, 5) int64
    terminal: TerminalInfo
    config: SimConfig
    crit: CriticalStructure = field(repr=False)

    def frame(self) -> dict:
        return observable_frame(self.counts, self.config.params, self.crit)


@dataclass(frozen=True)
class EnsembleResult:
    """Per-replica outputs of an ensemble, replica index keyed throughout."""

    config: SimConfig
    crit: CriticalStructure
    replicas: int
    stream_ids: np.ndarray
    times_slow: np.ndarray
    counts: np.ndarray          # (replicas, n_times, 5)
    n_live: np.ndarray
    stop_reason: list[str]
    tau0_slow: np.ndarray       # NaN where censored
    censored: np.ndarray
    n_events: np.ndarray
    int_zi_slow: np.ndarray
    sup_abs_z: np.ndarray
    t_sup_z_slow: np.ndarray
    sup_h: np.ndarray
    t_sup_h_slow: np.ndarray
    final_counts: np.ndarray

    def marginal_frame(self) -> dict:
        return observable_frame(self.counts, self.config.params, self.crit)


def _grid_slow(config: SimConfig) -> np.ndarray:
    n = int(math.floor(config.t_max_slow / config.record_grid_slow + 1e-9))
    return np.arange(n + 1) * config.record_grid_slow


def _check_status(status: int, config: SimConfig) -> str:
    reason = STOP_REASONS.get(int(status), "unknown")
    if status == _kernels.STATUS_CONSERVATION:
        raise RuntimeError("conservation check failed during simulation")
    if status == _kernels.STATUS_EVENT_BUDGET:
        raise RuntimeError(f"event budget exceeded ({config.max_events} events)")
    return reason


def run(config: SimConfig, crit: CriticalStructure, replica: int = 0) -> Trajectory:
    """Simulate one trajectory, sampling on the configured slow-time grid."""
    params = config.params
    state0 = build_initial_state(config.init, params, crit)
    sqrt_n = math.sqrt(params.N)
    t_slow = _grid_slow(config)
    sample_times = t_slow * sqrt_n
    out_counts = np.empty((len(sample_times), 5), dtype=np.int64)
    s_lo, s_hi, k0, k1 = stream_words(config.seed, replica)
    res = _kernels.partner_kernel(
        state0.S,
        state0.I,
        state0.J,
        state0.K,
        state0.L,
        params.r_plus,
        params.r_minus,
        params.lam,
        params.N,
        config.t_max_slow * sqrt_n,
        sample_times,
        config.stop_on_extinction,
        config.h_floor * sqrt_n,
        s_lo,
        s_hi,
        k0,
        k1,
        crit.y_star,
        crit.gamma,
        crit.eta,
        config.max_events,
        out_counts,
    )
    (status, tau0, n_events, int_zi, sup_z, t_sup_z, sup_h, t_sup_h, t_end, n_live) = res[:10]
    reason = _check_status(status, config)
    terminal = TerminalInfo(
        stop_reason=reason,
        tau0_slow=(tau0 / sqrt_n) if tau0 >= 0 else None,
        n_events=int(n_events),
        t_end_slow=t_end / sqrt_n,
        n_live_samples=int(n_live),
        sup_abs_z=sup_z,
        t_sup_z_slow=t_sup_z / sqrt_n,
        sup_h=sup_h,
        t_sup_h_slow=t_sup_h / sqrt_n,
        int_zi_slow=int_zi,
        final_counts=tuple(int(v) for v in res[10:15]),
    )
    return Trajectory(t_slow=t_slow, counts=out_counts, terminal=terminal, config=config, crit=crit)


def run_ensemble(
    config: SimConfig,
    crit: CriticalStructure,
    replicas: int,
    marginal_times_slow: Sequence[float] | None = None,
) -> EnsembleResult:
    """Independent replicas of ``config`` under per-replica Philox streams.

    ``marginal_times_slow`` selects the sampling instants; by default the
    dense grid of the config is recorded for every replica.
    """
    if replicas < 1:
        raise ConfigurationError("replicas must be >= 1")
    params = config.params
    state0 = build_initial_state(config.init, params, crit)
    sqrt_n = math.sqrt(params.N)
    if marginal_times_slow is None:
        t_slow = _grid_slow(config)
    else:
        t_slow = np.asarray(sorted(marginal_times_slow), dtype=np.float64)
        if len(t_slow) and t_slow[-1] > config.t_max_slow + 1e-12:
            raise ConfigurationError("marginal time beyond t_max_slow")
    sample_times = t_slow * sqrt_n

    words = np.empty((replicas, 4), dtype=np.uint32)
    sids = np.empty(replicas, dtype=np.uint64)
    for r in range(replicas):
        words[r] = stream_words(config.seed, r)
        sids[r] = stream_id(config.seed, r)

    counts = np.empty((replicas, len(sample_times), 5), dtype=np.int64)
    status = np.empty(replicas, dtype=np.int64)
    tau0 = np.empty(replicas, dtype=np.float64)
    n_events = np.empty(replicas, dtype=np.int64)
    int_zi = np.empty(replicas, dtype=np.float64)
    sup_z = np.empty(replicas, dtype=np.float64)
    t_sup_z = np.empty(replicas, dtype=np.float64)
    sup_h = np.empty(replicas, dtype=np.float64)
    t_sup_h = np.empty(replicas, dtype=np.float64)
    t_end = np.empty(replicas, dtype=np.float64)
    n_live = np.empty(replicas, dtype=np.int64)
    finals = np.empty((replicas, 5), dtype=np.int64)

    _kernels.partner_ensemble(
        state0.as_array(),
        params.r_plus,
        params.r_minus,
        params.lam,
        params.N,
        config.t_max_slow * sqrt_n,
        sample_times,
        config.stop_on_extinction,
        config.h_floor * sqrt_n,
        words,
        crit.y_star,
        crit.gamma,
        crit.eta,
        config.max_events,
        counts,
        status,
        tau0,
        n_events,
        int_zi,
        sup_z,
        t_sup_z,
        sup_h,
        t_sup_h,
        t_end,
        n_live,
        finals,
    )
    reasons = [_check_status(s, config) for s in status]
    tau0_slow = np.where(tau0 >= 0, tau0 / sqrt_n, np.nan)
    return EnsembleResult(
        config=config,
        crit=crit,
        replicas=replicas,
        stream_ids=sids,
        times_slow=t_slow,
        counts=counts,
        n_live=n_live,
        stop_reason=reasons,
        tau0_slow=tau0_slow,
        censored=np.isnan(tau0_slow),
        n_events=n_events,
        int_zi_slow=int_zi,
        sup_abs_z=sup_z,
        t_sup_z_slow=t_sup_z / sqrt_n,
        sup_h=sup_h,
        t_sup_h_slow=t_sup_h / sqrt_n,
        final_counts=finals,
    )


def reference_run(
    params: ModelParams,
    state0: PopulationState,
    t_max_fast: float,
    seed: int,
    replica: int = 0,
    max_events: int = 10**6,
):
    """Pure-Python direct-method simulation, for validating the kernel.

    Consumes the Philox stream exactly as the jitted kernel does (one block
    per event: waiting time, then channel selection scanning the churn
    channels first with identical float arithmetic) and checks conservation
    after every event.  Returns the event-time/state history.
    """
    from .model_core import TRANSITIONS, apply_transition, transition_rates

    rng = PhiloxStream(seed, replica)
    state = state0
    t = 0.0
    history = [(0.0, state)]
    for _ in range(max_events):
        if state.I + state.J + state.K == 0:
            break
        a = transition_rates(state, params)
        total = 0.0  # sequential sum, matching the kernel's rounding
        for q in a:
            total += q
        if total <= 0:
            break
        u = (float(rng.next_u64() >> np.uint64(11)) + 1.0) / 9007199254740992.0
        v = float(rng.next_u64() >> np.uint64(11)) / 9007199254740992.0
        t += -math.log(u) / total
        if t >= t_max_fast:
            break
        # mirror of the kernel's scan: churn first, then the rest in
        # canonical order with the same partial-sum expressions
        r = v * total
        if r < a[5]:
            chosen = 5
        elif r < a[5] + a[8]:
            chosen = 8
        else:
            r -= a[5] + a[8]
            if r < a[0]:
                chosen = 0
            elif r < a[0] + a[1]:
                chosen = 1
            elif r < a[0] + a[1] + a[2]:
                chosen = 2
            elif r < a[0] + a[1] + a[2] + a[3]:
                chosen = 3
            elif r < a[0] + a[1] + a[2] + a[3] + a[4]:
                chosen = 4
            elif r < a[0] + a[1] + a[2] + a[3] + a[4] + a[6]:
                chosen = 6
            elif r < a[0] + a[1] + a[2] + a[3] + a[4] + a[6] + a[7]:
                chosen = 7
            else:
                chosen = 9
        state = apply_transition(state, TRANSITIONS[chosen])
        state.validate(params.N)
        history.append((t, state))
    return history
