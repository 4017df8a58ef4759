"""Closed-form constants against independent oracles.

Expected values marked "frozen" were computed from the defining equations
written out in the test (quadratic formula, the three-state linear relation
for the critical rate), not from the implementation.
"""

import math

import numpy as np
import pytest

from partnersim.analytics import (
    InfiniteLambdaCError,
    build_matrix_A,
    char_poly_coeffs,
    critical_structure,
    delta_of_i,
    hitting_probs,
    hitting_probs_linear_solve,
    lambda_c,
    nonzero_eig_pair,
    r0,
    solve_y_star,
    structure_for_lambda,
)
from partnersim.model_core import ModelParams

PARAM_GRID = [(rp, rm) for rm in (0.5, 1.0, 2.0) for rp in (3.0, 4.0, 8.0)]
# (r+ = 3, r- = 0.5) sits exactly on r+ = 1 + 1/r-, where no finite
# critical rate exists; the critical identities apply to the others.
FINITE_GRID = [(rp, rm) for rp, rm in PARAM_GRID if rp > 1.0 + 1.0 / rm]


def test_boundary_grid_point_has_infinite_lambda_c():
    assert math.isinf(lambda_c(3.0, 0.5))
    assert len(FINITE_GRID) == len(PARAM_GRID) - 1


def test_y_star_simple_rational():
    # 2y^2 + y - 1 = 0 has roots 1/2 and -1: the (0,1) root is exactly 1/2
    assert solve_y_star(2.0, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_y_star_sqrt17():
    assert solve_y_star(4.0, 1.0) == pytest.approx((math.sqrt(17.0) - 1.0) / 8.0, abs=1e-15)


@pytest.mark.parametrize("rp,rm", PARAM_GRID)
def test_y_star_residual(rp, rm):
    ys = solve_y_star(rp, rm)
    assert 0.0 < ys < 1.0
    assert abs(rm * (1.0 - ys) - rp * ys * ys) < 1e-14


def test_hitting_probs_closed_vs_linear_solve_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        rp = float(rng.uniform(0.5, 10.0))
        rm = float(rng.uniform(0.1, 5.0))
        lam = float(rng.uniform(0.0, 50.0))
        ys = solve_y_star(rp, rm)
        closed = hitting_probs(rp, rm, lam, ys)
        ref = hitting_probs_linear_solve(rp, rm, lam, ys)
        assert closed.fA == pytest.approx(ref.fA, abs=1e-12)
        assert closed.fB == pytest.approx(ref.fB, abs=1e-12)
        assert closed.fC == pytest.approx(ref.fC, abs=1e-12)
        assert 0.0 <= closed.fA <= closed.fB
        assert 0.0 <= closed.fB <= 2.0 and 0.0 <= closed.fC <= 2.0


@pytest.mark.parametrize("rp,rm", FINITE_GRID)
def test_hitting_probs_at_critical(rp, rm):
    lam = lambda_c(rp, rm)
    ys = solve_y_star(rp, rm)
    probs = hitting_probs(rp, rm, lam, ys)
    assert probs.fA == pytest.approx(1.0, abs=1e-10)
    assert probs.fB == pytest.approx((1.0 + rp * ys) / (rp * ys), abs=1e-10)
    # first-jump relation out of the II state: f(C) = (2 f(B) + 2 r-)/(2 + r-)
    assert probs.fC == pytest.approx((2.0 * probs.fB + 2.0 * rm) / (2.0 + rm), abs=1e-10)


@pytest.mark.parametrize("rp,rm", FINITE_GRID)
def test_critical_hitting_values_are_the_h_weights(rp, rm):
    # at criticality the partnership-cycle values coincide with the
    # H-combination coefficients: f(A), f(C), f(B) = 1, gamma, eta
    crit = critical_structure(rp, rm)
    probs = hitting_probs(rp, rm, crit.lam, crit.y_star)
    assert probs.fB == pytest.approx(crit.eta, abs=1e-9)
    assert probs.fC == pytest.approx(crit.gamma, abs=1e-9)


def test_r0_no_transmission():
    # with lam = 0 the B->C edge is closed: fB = r_minus/(1+r_minus) and
    # R0 = r_plus y* /(1 + r_plus y*) * fB < 1
    ys = solve_y_star(4.0, 1.0)
    expected = 4.0 * ys / (1.0 + 4.0 * ys) * (1.0 * (1.0 + 2.0) / (2.0 + 3.0 + 1.0))
    got = r0(4.0, 1.0, 0.0)
    assert got == pytest.approx(expected, abs=1e-12)
    assert got < 1.0


def test_r0_strictly_increasing_in_lambda():
    values = [r0(4.0, 1.0, lam) for lam in (1.0, 10.0, 100.0, 1000.0)]
    assert all(a < b for a, b in zip(values, values[1:]))
    # monotone limit 2 r+ y* / (1 + r+ y*)
    ys = solve_y_star(4.0, 1.0)
    assert values[-1] < 2.0 * 4.0 * ys / (1.0 + 4.0 * ys)


def hand_lambda_c_r1_rp4() -> float:
    # At r-=1 the critical equation reads c*(3+2L) = 6+L with
    # c = r+y*/(1+r+y*), hence L = 3(2-c)/(2c-1).
    ys = (math.sqrt(17.0) - 1.0) / 8.0
    c = 4.0 * ys / (1.0 + 4.0 * ys)
    return 3.0 * (2.0 - c) / (2.0 * c - 1.0)


def test_lambda_c_hand_check():
    expected = hand_lambda_c_r1_rp4()  # ~19.027
    assert expected == pytest.approx(19.027, abs=5e-4)
    assert lambda_c(4.0, 1.0) == pytest.approx(expected, rel=1e-9)


def test_lambda_c_boundary_infinite():
    assert math.isinf(lambda_c(2.0, 1.0))  # r+ = 1 + 1/r- exactly
    assert math.isinf(lambda_c(1.5, 1.0))
    assert math.isfinite(lambda_c(2.01, 1.0))


def test_r0_equals_one_at_lambda_c():
    lam = lambda_c(4.0, 1.0)
    assert r0(4.0, 1.0, lam) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("rp,rm", FINITE_GRID)
def test_matrix_a_nullspace_at_critical(rp, rm):
    crit = critical_structure(rp, rm)
    A = crit.A
    norm = np.linalg.norm(A)
    assert np.linalg.norm(np.array([1.0, crit.gamma, crit.eta]) @ A) < 1e-10 * norm
    assert np.linalg.norm(A @ np.array([crit.alpha, crit.beta, 1.0])) < 1e-10 * norm
    assert abs(np.linalg.det(A)) < 1e-9 * norm**3


@pytest.mark.parametrize("rp,rm", FINITE_GRID)
def test_det_condition_matches_closed_form(rp, rm):
    lam = lambda_c(rp, rm)
    ys = solve_y_star(rp, rm)
    lhs = (rp * ys + 1.0) * (2.0 + (3.0 + lam) * rm + rm * rm)
    rhs = rp * ys * rm * (rm + 2.0 + 2.0 * lam)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_det_condition_iff_r0_one():
    rp, rm = 4.0, 1.0
    lam = lambda_c(rp, rm)
    ys = solve_y_star(rp, rm)
    for eps in (-1e-3, 1e-3):
        det = np.linalg.det(build_matrix_A(rp, rm, lam + eps, ys))
        assert abs(det) > 1e-6  # off criticality the determinant departs from 0
        assert abs(r0(rp, rm, lam + eps) - 1.0) > 1e-7


def test_trace_of_a():
    rp, rm, lam = 4.0, 1.0, 19.0
    ys = solve_y_star(rp, rm)
    A = build_matrix_A(rp, rm, lam, ys)
    expected = -((rp * ys + 1.0) + (rm + 2.0) + (rm + lam + 1.0))
    assert np.trace(A) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("rp,rm", FINITE_GRID)
def test_routh_hurwitz_and_eigenvalues(rp, rm):
    crit = critical_structure(rp, rm)
    b1, b2, b3 = char_poly_coeffs(rp, rm, crit.lam, crit.y_star)
    assert b1 > 0.0 and b2 > 0.0
    assert abs(b3) < 1e-8 * max(1.0, b1) ** 3
    eigs = np.linalg.eigvals(crit.A)
    nonzero = sorted(
        (e for e in eigs if abs(e) > 1e-7), key=lambda e: e.real
    )
    assert all(e.real < 0.0 for e in nonzero)
    # the quadratic-formula pair with discriminant b1^2 - 4*b2 (not the
    # typeset b1^2 - 4*b2^2) matches the general eigensolver
    pair = sorted(nonzero_eig_pair(b1, b2), key=lambda e: complex(e).real)
    for got, ref in zip(pair, nonzero):
        assert complex(got) == pytest.approx(ref, rel=1e-8)


def test_critical_structure_frozen_values_r1_rp4():
    crit = critical_structure(4.0, 1.0)
    ys = (math.sqrt(17.0) - 1.0) / 8.0
    eta = (4.0 * ys + 1.0) / (4.0 * ys)
    gamma = (2.0 + 2.0 * eta) / 3.0
    assert crit.eta == pytest.approx(eta, abs=1e-12)          # ~1.64039
    assert crit.gamma == pytest.approx(gamma, abs=1e-12)      # ~1.76026
    assert crit.eta == pytest.approx(1.64039, abs=1e-5)
    assert crit.gamma == pytest.approx(1.76026, abs=1e-5)
    assert crit.lam == pytest.approx(hand_lambda_c_r1_rp4(), rel=1e-9)


@pytest.mark.parametrize("rp,rm", FINITE_GRID)
def test_critical_structure_invariants(rp, rm):
    crit = critical_structure(rp, rm)
    assert crit.u_star + crit.v_star + crit.w_star == pytest.approx(1.0, abs=1e-15)
    assert crit.theta1 > 0.0 and crit.theta2 > 0.0
    assert 1.0 < crit.eta < 2.0 and 1.0 < crit.gamma < 2.0
    assert crit.mu_z == pytest.approx(rm + 2.0 * rp * crit.y_star, rel=1e-14)
    # the two printed forms of the z diffusivity agree via the y* equation
    assert crit.sigma_z2 == pytest.approx(4.0 * rm * (1.0 - crit.y_star), rel=1e-12)
    assert crit.mu_star > 0.0 and crit.sigma_star2 > 0.0
    assert crit.mu_X > 0.0 and crit.sigma_X2 > 0.0
    assert crit.mu_X == pytest.approx(crit.mu_star / crit.u_star, rel=1e-14)
    assert crit.sigma_X2 == pytest.approx(crit.u_star * crit.sigma_star2, rel=1e-14)


def test_infinite_lambda_c_raises():
    with pytest.raises(InfiniteLambdaCError):
        critical_structure(2.0, 1.0)


def test_delta_of_zero_at_critical():
    crit = critical_structure(4.0, 1.0)
    params = ModelParams(r_plus=4.0, r_minus=1.0, lam=crit.lam, N=1000)
    assert delta_of_i(params, crit.y_star, 0.0) == pytest.approx(0.0, abs=1e-10)


def test_delta_of_zero_negative_subcritical():
    crit = critical_structure(4.0, 1.0)
    params = ModelParams(r_plus=4.0, r_minus=1.0, lam=crit.lam / 2.0, N=1000)
    assert delta_of_i(params, crit.y_star, 0.0) < 0.0


def test_delta_event_probabilities_sum_to_one():
    # z is the sum of the three numerators, so p_S + p_II + p_SI = 1
    ys = solve_y_star(4.0, 1.0)
    for i in (0.0, 0.1, 0.25, ys * 0.99):
        zden = 1.0 + 4.0 * (ys - i / 2.0)
        p_sum = (1.0 + 4.0 * i / 2.0 + 4.0 * (ys - i)) / zden
        assert p_sum == pytest.approx(1.0, abs=1e-14)


def test_structure_for_lambda_formal_off_critical():
    s = structure_for_lambda(4.0, 1.0, 5.0)
    assert not s.is_critical
    # eta and gamma do not depend on lambda
    crit = critical_structure(4.0, 1.0)
    assert s.eta == crit.eta and s.gamma == crit.gamma
    # A has no null vector off criticality
    assert abs(np.linalg.det(s.A)) > 1e-3


def test_on_ray_diffusivity_table_matches_generic_oracle():
    """Dual route for sigma*^2: the symbolic on-ray table against the
    rate-weighted jump sum evaluated at a constructed on-ray state.  The
    residual is the finite-N linearization error, O(h/sqrt(N))."""
    import math

    from partnersim.model_core import ModelParams, PopulationState, drift_and_diffusivity

    crit = critical_structure(4.0, 1.0)
    N = 10**9
    params = ModelParams(r_plus=4.0, r_minus=1.0, lam=crit.lam, N=N)
    sq = math.sqrt(N)
    I = round(crit.alpha * sq)
    J = round(crit.beta * sq)
    K = round(sq)
    Y = round(N * crit.y_star)
    if (N - Y - 2 * (J + K)) % 2:
        Y -= 1
    state = PopulationState(Y - I, I, J, K, (N - Y - 2 * (J + K)) // 2)
    H = I + crit.gamma * J + crit.eta * K
    _, diff = drift_and_diffusivity(
        lambda s: s.I + crit.gamma * s.J + crit.eta * s.K, state, params
    )
    assert diff / H == pytest.approx(crit.sigma_star2, rel=1e-3)
