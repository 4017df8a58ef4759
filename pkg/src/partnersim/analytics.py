"""Closed-form constants of the partner model.

Everything the critical theory needs is computable in closed form from
``(r_plus, r_minus)``: the singles equilibrium ``y*``, the hitting
probabilities of the seven-state partnership-cycle chain, the reproduction
number R0 and its critical transmission rate ``lambda_c``, the linear drift
matrix ``A`` with its null vectors (the invariant ray and the H-combination),
the Ornstein-Uhlenbeck constants of the singles count, and the drift /
diffusivity coefficients of the limiting square-root diffusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .model_core import (
    ModelParams,
    TRANSITIONS,
    Transition,
    TransitionKind,
    delta_h,
)

__all__ = [
    "CriticalStructure",
    "HittingProbs",
    "InfiniteLambdaCError",
    "solve_y_star",
    "hitting_probs",
    "hitting_probs_linear_solve",
    "r0",
    "lambda_c",
    "build_matrix_A",
    "char_poly_coeffs",
    "nonzero_eig_pair",
    "critical_structure",
    "structure_for_lambda",
    "delta_of_i",
    "on_ray_diffusivity",
]


class InfiniteLambdaCError(ValueError):
    """No finite critical transmission rate exists (r_plus <= 1 + 1/r_minus)."""


def solve_y_star(r_plus: float, r_minus: float) -> float:
    """Unique root in (0, 1) of r_minus*(1 - y) = r_plus*y**2."""
    return (-r_minus + math.sqrt(r_minus * r_minus + 4.0 * r_plus * r_minus)) / (
        2.0 * r_plus
    )


@dataclass(frozen=True)
class HittingProbs:
    """Values f(x) = P_x(hit F) + 2*P_x(hit G) of the partnership-cycle chain.

    States: A = lone infected single, B = SI pair, C = II pair; absorbing
    states D, E (no infected singles produced), F (one: f=1), G (two: f=2).
    """

    fA: float
    fB: float
    fC: float


def _closed_form_fB(r_minus: float, lam: float) -> float:
    return (
        r_minus
        * (r_minus + 2.0 + 2.0 * lam)
        / (2.0 + (3.0 + lam) * r_minus + r_minus * r_minus)
    )


def hitting_probs_linear_solve(
    r_plus: float, r_minus: float, lam: float, y_star: float
) -> HittingProbs:
    """Independent oracle: absorption probabilities by direct linear solve.

    Builds the jump chain of the seven-state partnership cycle (transient
    {A, B, C}, absorbing {D, E, F, G}), solves (I - P)u = b separately for
    the probabilities of absorbing at F and at G, and combines f = uF + 2*uG.
    """
    a_out = r_plus * y_star + 1.0          # A -> B (pairing), A -> D (recovery)
    b_out = lam + 1.0 + r_minus            # B -> C, B -> E, B -> F
    c_out = 2.0 + r_minus                  # C -> B, C -> G
    # Transient-to-transient jump probabilities, order (A, B, C).
    P = np.array(
        [
            [0.0, r_plus * y_star / a_out, 0.0],
            [0.0, 0.0, lam / b_out],
            [0.0, 2.0 / c_out, 0.0],
        ]
    )
    hit_F = np.array([0.0, r_minus / b_out, 0.0])
    hit_G = np.array([0.0, 0.0, r_minus / c_out])
    M = np.eye(3) - P
    uF = np.linalg.solve(M, hit_F)
    uG = np.linalg.solve(M, hit_G)
    f = uF + 2.0 * uG
    return HittingProbs(fA=float(f[0]), fB=float(f[1]), fC=float(f[2]))


def hitting_probs(
    r_plus: float, r_minus: float, lam: float, y_star: float | None = None
) -> HittingProbs:
    """Closed-form f(A), f(B), f(C), cross-checked against the linear solve."""
    if y_star is None:
        y_star = solve_y_star(r_plus, r_minus)
    fB = _closed_form_fB(r_minus, lam)
    fC = 2.0 / (2.0 + r_minus) * fB + 2.0 * r_minus / (2.0 + r_minus)
    fA = r_plus * y_star / (1.0 + r_plus * y_star) * fB
    probs = HittingProbs(fA=fA, fB=fB, fC=fC)
    ref = hitting_probs_linear_solve(r_plus, r_minus, lam, y_star)
    if max(abs(probs.fA - ref.fA), abs(probs.fB - ref.fB), abs(probs.fC - ref.fC)) > 1e-12:
        raise RuntimeError(f"hitting-probability cross-check failed: {probs} vs {ref}")
    return probs


def r0(r_plus: float, r_minus: float, lam: float) -> float:
    """Reproduction number: expected infected singles after one cycle."""
    return hitting_probs(r_plus, r_minus, lam).fA


def lambda_c(r_plus: float, r_minus: float) -> float:
    """Critical transmission rate, or math.inf when none exists.

    R0 is strictly increasing in lambda with supremum
    2*r_plus*y_star / (1 + r_plus*y_star), which exceeds 1 iff
    r_plus > 1 + 1/r_minus; the boundary case is treated as infinite.
    The root is bracketed by doubling and bisected to the last float
    (well past the required 1e-12 relative width: residual criticality
    error would otherwise leak into the H-drift cancellation).
    """
    if r_plus <= 1.0 + 1.0 / r_minus:
        return math.inf
    y_star = solve_y_star(r_plus, r_minus)
    lo, hi = 1e-9, 1.0
    while hitting_probs(r_plus, r_minus, hi, y_star).fA <= 1.0:
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if hitting_probs(r_plus, r_minus, mid, y_star).fA < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_matrix_A(r_plus: float, r_minus: float, lam: float, y_star: float) -> np.ndarray:
    """Linear drift matrix of the infection vector (I, J, K)."""
    ry = r_plus * y_star
    return np.array(
        [
            [-(ry + 1.0), 2.0 * r_minus, r_minus],
            [0.0, -(r_minus + 2.0), lam],
            [ry, 2.0, -(r_minus + lam + 1.0)],
        ]
    )


def char_poly_coeffs(r_plus: float, r_minus: float, lam: float, y_star: float):
    """Coefficients (b1, b2, b3) of det(theta*I - A) = theta^3 + b1 theta^2 + b2 theta + b3."""
    ry = r_plus * y_star
    b1 = (ry + 1.0) + (r_minus + 2.0) + (r_minus + lam + 1.0)
    b2 = (
        (ry + 1.0) * (r_minus + 2.0)
        + (r_minus + 2.0) * (r_minus + lam + 1.0)
        - 2.0 * lam
        + (ry + 1.0) * (r_minus + lam + 1.0)
        - r_minus * ry
    )
    b3 = -float(np.linalg.det(build_matrix_A(r_plus, r_minus, lam, y_star)))
    return b1, b2, b3


def nonzero_eig_pair(b1: float, b2: float) -> tuple[complex, complex]:
    """The two nonzero eigenvalues at criticality (where b3 = 0).

    Roots of theta^2 + b1*theta + b2, i.e. (-b1 +- sqrt(b1^2 - 4*b2)) / 2.
    Verified against a general eigensolver in the test suite.
    """
    disc = b1 * b1 - 4.0 * b2
    s = math.sqrt(abs(disc))
    if disc >= 0.0:
        return (-b1 + s) / 2.0, (-b1 - s) / 2.0
    return complex(-b1 / 2.0, s / 2.0), complex(-b1 / 2.0, -s / 2.0)


# On-ray linearized rate coefficient of each channel: with the infection
# vector on the ray, (I, J, K) = (u*, v*/gamma, w*/eta) * H, each rate that
# matters for the diffusivity of H is (coefficient) * H up to lower order.
def _on_ray_rate_coeff(
    kind: TransitionKind,
    r_plus: float,
    r_minus: float,
    lam: float,
    y_star: float,
    u: float,
    jh: float,
    kh: float,
) -> float | None:
    """Coefficient c in rate = c*H + o(H), or None for channels whose rate
    is not of that order (quadratic in H, or O(N) churn)."""
    if kind is TransitionKind.RECOVER_I:
        return u
    if kind is TransitionKind.RECOVER_J:
        return 2.0 * jh
    if kind is TransitionKind.INFECT_K:
        return lam * kh
    if kind is TransitionKind.RECOVER_K:
        return kh
    if kind is TransitionKind.PAIR_SI:
        return r_plus * y_star * u          # linearized: S ~ N*y_star
    if kind is TransitionKind.SPLIT_J:
        return r_minus * jh
    if kind is TransitionKind.SPLIT_K:
        return r_minus * kh
    return None  # PAIR_II (quadratic), PAIR_SS / SPLIT_L (pure churn)


def on_ray_diffusivity(
    r_plus: float,
    r_minus: float,
    lam: float,
    y_star: float,
    gamma: float,
    eta: float,
    u_star: float,
    v_star: float,
    w_star: float,
    transitions: Iterable[Transition] = TRANSITIONS,
) -> float:
    """Diffusivity coefficient of h on the invariant ray.

    Computed from the transition table: sigma2 = sum_m c_m * (dH_m)^2 over
    the channels with rate c_m*H + o(H) on the ray, so that a change in the
    table propagates here automatically.  Channels excluded from the sum
    must not move H; the O(N) churn channels are asserted harmless.
    """
    jh = v_star / gamma   # J / H on the ray
    kh = w_star / eta     # K / H on the ray
    total = 0.0
    for tr in transitions:
        dh = delta_h(tr, gamma, eta)
        coeff = _on_ray_rate_coeff(tr.label, r_plus, r_minus, lam, y_star, u_star, jh, kh)
        if coeff is None:
            if tr.label in (TransitionKind.PAIR_SS, TransitionKind.SPLIT_L) and dh != 0.0:
                raise RuntimeError(f"O(N) channel {tr.label} moves H; scaling broken")
            continue
        total += coeff * dh * dh
    return total


@dataclass(frozen=True, eq=False)
class CriticalStructure:
    """All derived constants of the model at a given transmission rate.

    Built at lambda = lambda_c by :func:`critical_structure`; for other
    lambda the same formulas yield formal values (A then has no null
    vectors and H retains a linear drift term).
    """

    r_plus: float
    r_minus: float
    lam: float
    y_star: float
    eta: float
    gamma: float
    alpha: float
    beta: float
    d: float
    u_star: float
    v_star: float
    w_star: float
    theta1: float
    theta2: float
    A: np.ndarray = field(repr=False)
    mu_z: float
    sigma_z2: float
    mu_star: float
    sigma_star2: float
    mu_X: float
    sigma_X2: float
    is_critical: bool

    def as_dict(self) -> dict:
        out = {
            "r_plus": self.r_plus,
            "r_minus": self.r_minus,
            "lambda": self.lam,
            "y_star": self.y_star,
            "eta": self.eta,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "beta": self.beta,
            "d": self.d,
            "u_star": self.u_star,
            "v_star": self.v_star,
            "w_star": self.w_star,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "A": self.A.tolist(),
            "mu_z": self.mu_z,
            "sigma_z2": self.sigma_z2,
            "mu_star": self.mu_star,
            "sigma_star2": self.sigma_star2,
            "mu_X": self.mu_X,
            "sigma_X2": self.sigma_X2,
            "is_critical": self.is_critical,
        }
        return out


def structure_for_lambda(r_plus: float, r_minus: float, lam: float) -> CriticalStructure:
    """Constants evaluated at an arbitrary lambda (formal off criticality)."""
    y_star = solve_y_star(r_plus, r_minus)
    ry = r_plus * y_star
    eta = (ry + 1.0) / ry
    gamma = (2.0 * r_minus + 2.0 * eta) / (r_minus + 2.0)
    alpha = r_minus / (ry + 1.0) * (2.0 * lam / (r_minus + 2.0) + 1.0)
    beta = lam / (r_minus + 2.0)
    d = alpha + beta * gamma + eta
    u_star = alpha / d
    v_star = beta * gamma / d
    w_star = eta / d
    theta1 = 2.0 * r_minus / gamma - r_minus / eta
    theta2 = gamma * lam / eta
    A = build_matrix_A(r_plus, r_minus, lam, y_star)
    mu_z = r_minus + 2.0 * ry
    sigma_z2 = 2.0 * (r_minus * (1.0 - y_star) + r_plus * y_star * y_star)
    mu_star = (eta - gamma / 2.0) * r_plus * u_star * u_star
    sigma_star2 = on_ray_diffusivity(
        r_plus, r_minus, lam, y_star, gamma, eta, u_star, v_star, w_star
    )
    # The limit of i = u_star * h is a deterministic change of variable of
    # the h-equation dh = -mu_star h^2 dt + sigma_star sqrt(h) dB.
    mu_X = mu_star / u_star
    sigma_X2 = u_star * sigma_star2
    crit_lam = lambda_c(r_plus, r_minus)
    is_critical = math.isfinite(crit_lam) and abs(lam - crit_lam) <= 1e-9 * max(1.0, crit_lam)
    return CriticalStructure(
        r_plus=r_plus,
        r_minus=r_minus,
        lam=lam,
        y_star=y_star,
        eta=eta,
        gamma=gamma,
        alpha=alpha,
        beta=beta,
        d=d,
        u_star=u_star,
        v_star=v_star,
        w_star=w_star,
        theta1=theta1,
        theta2=theta2,
        A=A,
        mu_z=mu_z,
        sigma_z2=sigma_z2,
        mu_star=mu_star,
        sigma_star2=sigma_star2,
        mu_X=mu_X,
        sigma_X2=sigma_X2,
        is_critical=is_critical,
    )


def critical_structure(r_plus: float, r_minus: float) -> CriticalStructure:
    """Full constant set at the critical transmission rate.

    Raises :class:`InfiniteLambdaCError` when r_plus <= 1 + 1/r_minus.
    """
    lam = lambda_c(r_plus, r_minus)
    if not math.isfinite(lam):
        raise InfiniteLambdaCError(
            f"lambda_c infinite for r_plus={r_plus}, r_minus={r_minus}"
        )
    crit = structure_for_lambda(r_plus, r_minus, lam)
    _check_critical(crit)
    return crit


def _check_critical(c: CriticalStructure) -> None:
    left = np.array([1.0, c.gamma, c.eta]) @ c.A
    right = c.A @ np.array([c.alpha, c.beta, 1.0])
    norm = np.linalg.norm(c.A)
    ok = (
        abs(c.r_minus * (1.0 - c.y_star) - c.r_plus * c.y_star**2) < 1e-12
        and np.linalg.norm(left) < 1e-10 * max(1.0, norm)
        and np.linalg.norm(right) < 1e-10 * max(1.0, norm)
        and abs(np.linalg.det(c.A)) < 1e-9 * norm**3
        and 1.0 < c.eta < 2.0
        and 1.0 < c.gamma < 2.0
        and abs(c.u_star + c.v_star + c.w_star - 1.0) < 1e-12
        and c.theta1 > 0.0
        and c.theta2 > 0.0
        and c.mu_X > 0.0
        and c.sigma_X2 > 0.0
    )
    if not ok:
        raise RuntimeError(f"critical structure failed self-check: {c}")


def delta_of_i(params: ModelParams, y_star: float, i: float) -> float:
    """Expected change in infected singles per I-affecting event.

    Valid for 0 <= i < y_star.  Event probabilities weight recovery,
    II-pairing and SI-pairing; pair outcomes are scored through the
    hitting values of the partnership-cycle chain.
    """
    if not (0.0 <= i < y_star):
        raise ValueError(f"need 0 <= i < y_star, got i={i}, y_star={y_star}")
    probs = hitting_probs(params.r_plus, params.r_minus, params.lam, y_star)
    zden = 1.0 + params.r_plus * (y_star - i / 2.0)
    p_s = 1.0 / zden
    p_ii = params.r_plus * i / (2.0 * zden)
    p_si = params.r_plus * (y_star - i) / zden
    d_s = -1.0
    d_ii = -2.0 + probs.fC
    d_si = -1.0 + probs.fB
    return p_s * d_s + p_ii * d_ii + p_si * d_si
