"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run pytest with -s to stream them).
The heavy Monte-Carlo experiments are deterministic (fixed master seeds)
and disk-cached by source hash, so a green result is reproducible and
re-runs are cheap.  Expected wall time for a cold run on two cores is a
few hours, dominated by the diffusion-limit and extinction-scaling
ensembles.
"""

import math

import numpy as np
import pytest

from conftest import cached_verdict

from partnersim import experiments, stats
from partnersim.analytics import (
    build_matrix_A,
    critical_structure,
    delta_of_i,
    hitting_probs,
    hitting_probs_linear_solve,
    lambda_c,
    solve_y_star,
)
from partnersim.model_core import ModelParams, PopulationState, drift_and_diffusivity

GRID = [(rp, rm) for rm in (0.5, 1.0, 2.0) for rp in (3.0, 4.0, 8.0)]


def report(name: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'} ({detail})", flush=True)
    assert passed, f"{name}: {detail}"


# --- algebraic suite (< 1 s) -------------------------------------------------

def test_acceptance_algebraic_suite():
    failures = []
    for rp, rm in GRID:
        if rp <= 1.0 + 1.0 / rm:
            # no finite critical rate on this grid point; the correct
            # output is the distinguished "infinite" value
            if not math.isinf(lambda_c(rp, rm)):
                failures.append(f"({rp},{rm}): lambda_c should be infinite")
            continue
        crit = critical_structure(rp, rm)
        ys, lam, A = crit.y_star, crit.lam, crit.A
        norm = np.linalg.norm(A)
        if abs(rm * (1 - ys) - rp * ys**2) >= 1e-12:
            failures.append(f"({rp},{rm}): y* residual")
        if np.linalg.norm(np.array([1.0, crit.gamma, crit.eta]) @ A) >= 1e-10:
            failures.append(f"({rp},{rm}): left null vector")
        if np.linalg.norm(A @ np.array([crit.alpha, crit.beta, 1.0])) >= 1e-10:
            failures.append(f"({rp},{rm}): invariant ray")
        if abs(np.linalg.det(A)) >= 1e-9 * norm**3:
            failures.append(f"({rp},{rm}): det A")
        lhs = (rp * ys + 1) * (2 + (3 + lam) * rm + rm * rm)
        rhs = rp * ys * rm * (rm + 2 + 2 * lam)
        if abs(lhs - rhs) >= 1e-9 * abs(lhs):
            failures.append(f"({rp},{rm}): determinant condition")
        params = ModelParams(r_plus=rp, r_minus=rm, lam=lam, N=1000)
        if abs(delta_of_i(params, ys, 0.0)) >= 1e-10:
            failures.append(f"({rp},{rm}): Delta(0)")
        probs = hitting_probs(rp, rm, lam, ys)
        if abs(probs.fA - 1.0) >= 1e-10:
            failures.append(f"({rp},{rm}): f(A)")
        if abs(probs.fB - (1 + rp * ys) / (rp * ys)) >= 1e-10:
            failures.append(f"({rp},{rm}): f(B)")
        # corrected f(C) identity (first-jump relation); the typeset
        # 2r-/(2+r-) contradicts the seven-state chain itself
        if abs(probs.fC - (2 * probs.fB + 2 * rm) / (2 + rm)) >= 1e-10:
            failures.append(f"({rp},{rm}): f(C)")
    rng = np.random.default_rng(2024)
    for _ in range(100):
        rp = float(rng.uniform(0.5, 10))
        rm = float(rng.uniform(0.1, 5))
        lam = float(rng.uniform(0.0, 50))
        ys = solve_y_star(rp, rm)
        closed = hitting_probs(rp, rm, lam, ys)
        ref = hitting_probs_linear_solve(rp, rm, lam, ys)
        if max(abs(closed.fA - ref.fA), abs(closed.fB - ref.fB), abs(closed.fC - ref.fC)) >= 1e-12:
            failures.append(f"random ({rp:.3f},{rm:.3f},{lam:.3f}): closed vs solve")
    report("algebraic-suite", not failures, "; ".join(failures) or "all identities hold")


# --- drift oracle (< 10 s) ---------------------------------------------------

def test_acceptance_drift_oracle_suite():
    crit = critical_structure(4.0, 1.0)
    params = ModelParams(r_plus=4.0, r_minus=1.0, lam=crit.lam, N=500)
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(1000):
        pairs = int(rng.integers(0, params.N // 2 + 1))
        j = int(rng.integers(0, pairs + 1))
        k = int(rng.integers(0, pairs - j + 1))
        el = pairs - j - k
        singles = params.N - 2 * pairs
        i = int(rng.integers(0, singles + 1)) if singles else 0
        state = PopulationState(S=singles - i, I=i, J=j, K=k, L=el)

        S, I, J, K, L = state.S, state.I, state.J, state.K, state.L
        rp, rm, lam, N = params.r_plus, params.r_minus, params.lam, params.N
        expected = [
            2 * rm * L + rm * K - rp / N * S * (S - 1) - rp / N * S * I + I,
            2 * rm * J + rm * K - rp / N * I * (I - 1) - rp / N * S * I - I,
            -rm * J + rp / N * I * (I - 1) / 2 - 2 * J + lam * K,
            -rm * K + rp / N * S * I + 2 * J - (lam + 1) * K,
            -rm * L + rp / N * S * (S - 1) / 2 + K,
        ]
        got = [
            drift_and_diffusivity(f, state, params)[0]
            for f in (
                lambda s: s.S, lambda s: s.I, lambda s: s.J, lambda s: s.K, lambda s: s.L,
            )
        ]
        for g, e in zip(got, expected):
            worst = max(worst, abs(g - e) / max(1.0, abs(e)))

        Y = S + I
        gy, _ = drift_and_diffusivity(lambda s: s.S + s.I, state, params)
        ey = rm * (N - Y) - rp / N * Y * (Y - 1)
        worst = max(worst, abs(gy - ey) / max(1.0, abs(ey)))

        gh, _ = drift_and_diffusivity(
            lambda s: s.I + crit.gamma * s.J + crit.eta * s.K, state, params
        )
        Z = Y - N * crit.y_star
        eh = (
            (crit.eta - 1) * rp * Z * I / N
            - (crit.eta - crit.gamma / 2) * rp * I * I / N
            + (1 - crit.gamma / 2) * rp * I / N
        )
        # the generic oracle evaluates f(state+delta)-f(state); for H the
        # two values dwarf the increment, so each channel carries an
        # unavoidable ~2*f*eps cancellation error times its rate
        f_mag = I + crit.gamma * J + crit.eta * K
        total_rate = (
            I + 2 * J + lam * K + rp / N * I * (I - 1) / 2 + rp / N * S * I
            + rm * (J + K) + K
        )
        floor = 4.0 * 2.2e-16 * f_mag * total_rate
        worst = max(worst, (abs(gh - eh) - floor) / max(1.0, abs(eh)))
    report("drift-oracle", worst < 1e-10, f"worst relative error {worst:.2e} on 1000 states")


# --- Monte-Carlo criteria (cached, heavy) -------------------------------------

def test_acceptance_ode_tracking():
    v = cached_verdict("ode_tracking", experiments.exp_ode_tracking)
    report("ode-tracking", v["pass"], f"sup |mean y - ODE| = {v['statistic']:.4f} < 0.02")


def test_acceptance_ou_fluctuations():
    v = cached_verdict("ou_check", experiments.exp_ou_check)
    s = v["statistic"]
    report(
        "ou-fluctuations",
        v["pass"],
        f"z-var rel err {s['var_rel_err']:.3f} < 0.10; chain KS {s['chain_ks']:.3f} < 0.05",
    )


def test_acceptance_state_space_collapse():
    v = cached_verdict("collapse", experiments.exp_collapse)
    s = v["statistic"]
    report(
        "state-space-collapse",
        v["pass"],
        f"hit fraction {s['hit_fraction']:.3f} >= 0.95 within 50 log N; "
        f"occupation {s['pooled_occupation']:.4f} >= 0.99",
    )


def test_acceptance_averaging():
    v = cached_verdict("averaging", experiments.exp_averaging)
    meds = dict((int(n), m) for n, m in v["statistic"]["medians"])
    report(
        "averaging",
        v["pass"],
        f"median |int z i ds|: N=1e4 -> {meds[10_000]:.4f}, N=1e5 -> {meds[100_000]:.4f}",
    )


def test_acceptance_extinction_scaling():
    v = cached_verdict("extinction_scaling", experiments.exp_extinction_scaling)
    s = v["statistic"]
    report(
        "extinction-scaling",
        v["pass"],
        f"slow medians {s['medians_slow']}; ratios {['%.3f' % r for r in s['ratios_slow']]} "
        f"in [0.75, 1.33]; fast slope {s['slope_fast']:.3f} in [0.4, 0.6]",
    )


def test_acceptance_diffusion_limit():
    v = cached_verdict("diffusion_compare", experiments.exp_diffusion_compare)
    s = v["statistic"]
    report(
        "diffusion-limit",
        v["pass"],
        f"KS marginals {s['ks_by_time']}; KS tau0 {s['ks_tau0']:.4f}; all < 0.10",
    )


def test_acceptance_mfcp():
    v = cached_verdict("mfcp", experiments.exp_mfcp)
    s = v["statistic"]
    report(
        "mean-field-contact-process",
        v["pass"],
        f"KS x_N(1) {s['ks_marginal']:.4f} < 0.08; KS tau0 {s['ks_tau0']:.4f} < 0.10",
    )


# --- determinism ---------------------------------------------------------------

def test_acceptance_determinism(tmp_path):
    from partnersim.cli import main

    outputs = []
    for threads, name in [(1, "t1"), (2, "t2"), (2, "t2b")]:
        out = tmp_path / name
        code = main(
            ["ensemble", "--n", "10000", "--replicas", "8", "--seed", "1",
             "--t-max", "2", "--marginal-times", "0.5,1.0",
             "--threads", str(threads), "--out", str(out)]
        )
        assert code == 0
        outputs.append((out / "ensemble.csv").read_bytes())
    passed = outputs[0] == outputs[1] == outputs[2]
    report("determinism", passed, "byte-identical ensemble CSV at threads=1,2 and across runs")
