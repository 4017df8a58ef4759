"""State, transitions and observables of the partner model.

The population of ``N`` individuals is described by five integer counts:
single susceptibles ``S``, single infecteds ``I``, and partnered pairs
``J`` (both infected), ``K`` (one of each) and ``L`` (both susceptible).
``S + I + 2*(J + K + L) == N`` always.

Ten event channels drive the continuous-time Markov chain.  Recoveries
happen at rate 1 per infected individual (single or partnered), within-pair
transmission at rate ``lam`` per discordant pair, pair formation at rate
``r_plus/N`` per pair of singles, and dissolution at rate ``r_minus`` per
pair.  Note the within-pair recovery ``K -> L``: an SI pair whose infected
member recovers becomes an SS pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .analytics import CriticalStructure

# N is capped so that rate products like r_plus*S*(S-1)/2 stay exactly
# representable enough in doubles (N*(N-1)/2 < 2^61).
N_MAX = 2**31

UNDEFINED = float("nan")


class InvalidStateError(ValueError):
    """State vector violates the conservation law or positivity."""


class InfeasibleTransitionError(ValueError):
    """Applying the transition would drive a count negative."""


@dataclass(frozen=True)
class ModelParams:
    """Model rates and population size."""

    r_plus: float
    r_minus: float
    lam: float
    N: int

    def __post_init__(self):
        if not (self.r_plus > 0 and self.r_minus > 0 and self.lam >= 0):
            raise ValueError("rates must be positive (lam >= 0)")
        if not (2 <= self.N <= N_MAX):
            raise ValueError(f"N must be in [2, {N_MAX}]")


@dataclass(frozen=True)
class PopulationState:
    S: int
    I: int
    J: int
    K: int
    L: int

    def __post_init__(self):
        if min(self.S, self.I, self.J, self.K, self.L) < 0:
            raise InvalidStateError(f"negative count in {self}")

    @property
    def total(self) -> int:
        return self.S + self.I + 2 * (self.J + self.K + self.L)

    def validate(self, N: int) -> None:
        if self.total != N:
            raise InvalidStateError(
                f"conservation violated: S+I+2(J+K+L) = {self.total} != N = {N}"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.S, self.I, self.J, self.K, self.L], dtype=np.int64)


class TransitionKind(Enum):
    """The ten event channels, in the canonical rate-vector order."""

    RECOVER_I = 0     # I -> S            rate I
    RECOVER_J = 1     # J -> K            rate 2*J
    INFECT_K = 2      # K -> J            rate lam*K
    PAIR_II = 3       # I + I -> J        rate r_plus*I*(I-1)/(2N)
    PAIR_SI = 4       # S + I -> K        rate r_plus*S*I/N
    PAIR_SS = 5       # S + S -> L        rate r_plus*S*(S-1)/(2N)
    SPLIT_J = 6       # J -> I + I        rate r_minus*J
    SPLIT_K = 7       # K -> S + I        rate r_minus*K
    SPLIT_L = 8       # L -> S + S        rate r_minus*L
    RECOVER_K = 9     # K -> L            rate K


@dataclass(frozen=True)
class Transition:
    label: TransitionKind
    delta: tuple[int, int, int, int, int]  # applied to (S, I, J, K, L)


#: Canonical transition table.  Deltas preserve S + I + 2(J+K+L).
TRANSITIONS: tuple[Transition, ...] = (
    Transition(TransitionKind.RECOVER_I, (+1, -1, 0, 0, 0)),
    Transition(TransitionKind.RECOVER_J, (0, 0, -1, +1, 0)),
    Transition(TransitionKind.INFECT_K, (0, 0, +1, -1, 0)),
    Transition(TransitionKind.PAIR_II, (0, -2, +1, 0, 0)),
    Transition(TransitionKind.PAIR_SI, (-1, -1, 0, +1, 0)),
    Transition(TransitionKind.PAIR_SS, (-2, 0, 0, 0, +1)),
    Transition(TransitionKind.SPLIT_J, (0, +2, -1, 0, 0)),
    Transition(TransitionKind.SPLIT_K, (+1, +1, 0, -1, 0)),
    Transition(TransitionKind.SPLIT_L, (+2, 0, 0, 0, -1)),
    Transition(TransitionKind.RECOVER_K, (0, 0, 0, -1, +1)),
)

N_TRANSITIONS = len(TRANSITIONS)


def transition_rates(state: PopulationState, params: ModelParams) -> np.ndarray:
    """Rates of the ten channels at ``state``, in canonical order.

    Pairing rates use the exact combinatorial forms ``I*(I-1)/2`` and
    ``S*(S-1)/2`` rather than mean-field squares, so the generic drift
    oracle reproduces the drift equations exactly.
    """
    state.validate(params.N)
    S, I, J, K, L = state.S, state.I, state.J, state.K, state.L
    rp_over_n = params.r_plus / params.N
    rates = np.array(
        [
            float(I),
            2.0 * J,
            params.lam * K,
            rp_over_n * I * (I - 1) * 0.5,
            rp_over_n * S * I,
            rp_over_n * S * (S - 1) * 0.5,
            params.r_minus * J,
            params.r_minus * K,
            params.r_minus * L,
            float(K),
        ]
    )
    return rates


def apply_transition(state: PopulationState, transition: Transition) -> PopulationState:
    d = transition.delta
    new = (state.S + d[0], state.I + d[1], state.J + d[2], state.K + d[3], state.L + d[4])
    if min(new) < 0:
        raise InfeasibleTransitionError(
            f"{transition.label.name} infeasible from {state}"
        )
    return PopulationState(*new)


@dataclass(frozen=True)
class Observables:
    """Scaled observables of one state.

    ``U``, ``V``, ``W`` and ``Q`` are NaN when ``H == 0`` (extinct);
    consumers must branch on extinction rather than treat them as zero.
    """

    Y: int
    y: float
    z: float
    i: float
    j: float
    k: float
    H: float
    h: float
    U: float
    V: float
    W: float
    Q: float


def uvwq_from_ijk(i: float, j: float, k: float, crit: "CriticalStructure"):
    """(U, V, W, Q) for an infection vector, NaN-marked when H = 0.

    Accepts real-valued coordinates so it can be evaluated both on integer
    counts and exactly on the invariant ray.
    """
    H = i + crit.gamma * j + crit.eta * k
    if H <= 0.0:
        return UNDEFINED, UNDEFINED, UNDEFINED, UNDEFINED
    U = i / H
    V = crit.gamma * j / H
    W = crit.eta * k / H
    Q = crit.theta2 * (U - crit.u_star) ** 2 + crit.theta1 * (V - crit.v_star) ** 2
    return U, V, W, Q


def observables(
    state: PopulationState, params: ModelParams, crit: "CriticalStructure"
) -> Observables:
    """All scaled observables of ``state``.

    For off-critical ``params.lam`` the combination coefficients (1, gamma,
    eta) carried by ``crit`` are formal values; H then retains a linear
    drift term.
    """
    state.validate(params.N)
    N = params.N
    sqrt_n = math.sqrt(N)
    Y = state.S + state.I
    y = Y / N
    z = (Y - N * crit.y_star) / sqrt_n
    i = state.I / sqrt_n
    j = state.J / sqrt_n
    k = state.K / sqrt_n
    H = state.I + crit.gamma * state.J + crit.eta * state.K
    U, V, W, Q = uvwq_from_ijk(float(state.I), float(state.J), float(state.K), crit)
    return Observables(Y=Y, y=y, z=z, i=i, j=j, k=k, H=H, h=H / sqrt_n, U=U, V=V, W=W, Q=Q)


def drift_and_diffusivity(
    f: Callable[[PopulationState], float],
    state: PopulationState,
    params: ModelParams,
) -> tuple[float, float]:
    """Generic drift and diffusivity of the observable ``f`` at ``state``.

    Returns ``(sum_m q_m * df_m, sum_m q_m * df_m**2)`` over the transition
    table, where ``df_m = f(state + delta_m) - f(state)``.  Channels with
    zero rate are skipped, so ``f`` is never evaluated on infeasible states.
    """
    rates = transition_rates(state, params)
    f0 = f(state)
    drift = 0.0
    diff = 0.0
    for q, tr in zip(rates, TRANSITIONS):
        if q == 0.0:
            continue
        df = f(apply_transition(state, tr)) - f0
        drift += q * df
        diff += q * df * df
    return drift, diff


def delta_h(transition: Transition, gamma: float, eta: float) -> float:
    """Jump of H = I + gamma*J + eta*K at one transition."""
    d = transition.delta
    return d[1] + gamma * d[2] + eta * d[3]
