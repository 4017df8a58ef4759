"""Experiment pipelines behind the CLI commands and the acceptance suite.

Each function runs one named experiment end to end (simulate, reduce,
verdict) and optionally writes its artifacts (CSV + manifest + verdict
JSON) into a fresh output directory.  All randomness derives from the
single master seed passed in.
"""

from __future__ import annotations

import math
import time
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import artifacts, sde, stats
from .analytics import (
    CriticalStructure,
    char_poly_coeffs,
    critical_structure,
    nonzero_eig_pair,
    structure_for_lambda,
)
from .model_core import ModelParams
from .simulator import (
    EnsembleResult,
    InitialCondition,
    SimConfig,
    run,
    run_ensemble,
)

DEFAULT_R_PLUS = 4.0
DEFAULT_R_MINUS = 1.0


@lru_cache(maxsize=32)
def cached_critical(r_plus: float = DEFAULT_R_PLUS, r_minus: float = DEFAULT_R_MINUS) -> CriticalStructure:
    return critical_structure(r_plus, r_minus)


def critical_params(N: int, r_plus: float = DEFAULT_R_PLUS, r_minus: float = DEFAULT_R_MINUS):
    crit = cached_critical(r_plus, r_minus)
    return ModelParams(r_plus=r_plus, r_minus=r_minus, lam=crit.lam, N=N), crit


def exp_constants(r_plus: float, r_minus: float) -> dict:
    """Every closed-form constant, plus the spectral data of A."""
    crit = critical_structure(r_plus, r_minus)
    b1, b2, b3 = char_poly_coeffs(r_plus, r_minus, crit.lam, crit.y_star)
    pair = nonzero_eig_pair(b1, b2)
    eigs = np.linalg.eigvals(crit.A)
    payload = crit.as_dict()
    payload["lambda_c"] = crit.lam
    payload["char_poly"] = {"b1": b1, "b2": b2, "b3": b3}
    payload["nonzero_eig_pair"] = [[e.real, e.imag] if isinstance(e, complex) else [e, 0.0] for e in pair]
    payload["eigenvalues"] = sorted([[e.real, e.imag] for e in eigs])
    return payload


def _write_run(out_dir, command, config_echo, seed, t0, n_events, writers):
    if out_dir is None:
        return
    out = artifacts.fresh_dir(out_dir)
    for name, writer in writers.items():
        writer(out / name)
    artifacts.write_manifest(out, command, config_echo, seed, time.time() - t0, int(n_events))


def exp_simulate(
    N: int,
    seed: int,
    t_max_slow: float,
    grid_slow: float = 0.01,
    r_plus: float = DEFAULT_R_PLUS,
    r_minus: float = DEFAULT_R_MINUS,
    lam: float | None = None,
    init: InitialCondition | None = None,
    stop_on_extinction: bool = True,
    h_floor: float = 0.0,
    out_dir=None,
):
    """One trajectory on the dense grid; writes trajectory.csv when out_dir is set."""
    t0 = time.time()
    if lam is None:
        params, crit = critical_params(N, r_plus, r_minus)
    else:
        crit = structure_for_lambda(r_plus, r_minus, lam)
        params = ModelParams(r_plus=r_plus, r_minus=r_minus, lam=lam, N=N)
    init = init or InitialCondition.on_ray(1.0)
    config = SimConfig(
        params=params,
        init=init,
        t_max_slow=t_max_slow,
        record_grid_slow=grid_slow,
        stop_on_extinction=stop_on_extinction,
        h_floor=h_floor,
        seed=seed,
    )
    traj = run(config, crit)
    _write_run(
        out_dir,
        "simulate",
        {
            "N": N, "r_plus": r_plus, "r_minus": r_minus, "lambda": params.lam,
            "init": repr(init), "t_max_slow": t_max_slow, "grid_slow": grid_slow,
            "stop_on_extinction": stop_on_extinction, "h_floor": h_floor,
        },
        seed,
        t0,
        traj.terminal.n_events,
        {"trajectory.csv": lambda p: artifacts.write_trajectory_csv(p, traj)},
    )
    return traj


def exp_ensemble(
    N: int,
    replicas: int,
    seed: int,
    t_max_slow: float,
    marginal_times_slow: Sequence[float] = (),
    grid_slow: float = 0.01,
    r_plus: float = DEFAULT_R_PLUS,
    r_minus: float = DEFAULT_R_MINUS,
    lam: float | None = None,
    init: InitialCondition | None = None,
    stop_on_extinction: bool = True,
    h_floor: float = 0.0,
    dense_grid: bool = False,
    out_dir=None,
) -> EnsembleResult:
    """Replica ensemble recording marginals (or the dense grid)."""
    t0 = time.time()
    if lam is None:
        params, crit = critical_params(N, r_plus, r_minus)
    else:
        crit = structure_for_lambda(r_plus, r_minus, lam)
        params = ModelParams(r_plus=r_plus, r_minus=r_minus, lam=lam, N=N)
    init = init or InitialCondition.on_ray(1.0)
    config = SimConfig(
        params=params,
        init=init,
        t_max_slow=t_max_slow,
        record_grid_slow=grid_slow,
        stop_on_extinction=stop_on_extinction,
        h_floor=h_floor,
        seed=seed,
    )
    result = run_ensemble(
        config, crit, replicas, None if dense_grid else list(marginal_times_slow)
    )
    _write_run(
        out_dir,
        "ensemble",
        {
            "N": N, "replicas": replicas, "r_plus": r_plus, "r_minus": r_minus,
            "lambda": params.lam, "init": repr(init), "t_max_slow": t_max_slow,
            "grid_slow": grid_slow, "marginal_times_slow": list(marginal_times_slow),
            "stop_on_extinction": stop_on_extinction, "h_floor": h_floor,
            "dense_grid": dense_grid,
        },
        seed,
        t0,
        result.n_events.sum(),
        {"ensemble.csv": lambda p: artifacts.write_ensemble_csv(p, result)},
    )
    return result


def y_ode_solution(r_plus: float, r_minus: float, y0: float, t_fast: np.ndarray) -> np.ndarray:
    """High-accuracy solution of y' = r_minus (1-y) - r_plus y^2."""
    sol = solve_ivp(
        lambda _, y: r_minus * (1.0 - y) - r_plus * y * y,
        (0.0, float(t_fast[-1])),
        [y0],
        t_eval=t_fast,
        rtol=1e-10,
        atol=1e-12,
        dense_output=False,
    )
    return sol.y[0]


def exp_ode_tracking(
    N: int = 10_000,
    replicas: int = 200,
    seed: int = 101,
    t_fast_max: float = 5.0,
    grid_fast: float = 0.025,
    r_plus: float = DEFAULT_R_PLUS,
    r_minus: float = DEFAULT_R_MINUS,
    tolerance: float = 0.02,
    out_dir=None,
) -> dict:
    """Ensemble mean of y against the singles ODE, sup-norm distance."""
    t0 = time.time()
    sqrt_n = math.sqrt(N)
    i0 = math.ceil(sqrt_n)
    result = exp_ensemble(
        N=N,
        replicas=replicas,
        seed=seed,
        t_max_slow=t_fast_max / sqrt_n,
        grid_slow=grid_fast / sqrt_n,
        r_plus=r_plus,
        r_minus=r_minus,
        init=InitialCondition.all_susceptible_plus(i0),
        stop_on_extinction=False,
        dense_grid=True,
    )
    y_mean = result.marginal_frame()["y"].mean(axis=0)
    t_fast = result.times_slow * sqrt_n
    y_ref = y_ode_solution(r_plus, r_minus, 1.0, t_fast)  # everyone starts single
    sup = float(np.max(np.abs(y_mean - y_ref)))
    verdict = artifacts.verdict_payload(
        "ode_tracking",
        {"N": N, "replicas": replicas, "seed": seed, "t_fast_max": t_fast_max},
        sup,
        tolerance,
        sup < tolerance,
    )
    _write_run(
        out_dir, "ode-tracking", verdict["inputs"], seed, t0, result.n_events.sum(),
        {"verdict.json": lambda p: artifacts.write_json(p, verdict)},
    )
    return verdict


def exp_ou_check(
    N: int = 100_000,
    replicas: int = 8,
    window_fast: tuple[float, float] = (20.0, 200.0),
    grid_fast: float = 0.5,
    chain_N: int = 10_000,
    chain_replicas: int = 2000,
    chain_ref_samples: int = 8000,
    seed: int = 202,
    var_tolerance: float = 0.10,
    ks_tolerance: float = 0.05,
    r_plus: float = DEFAULT_R_PLUS,
    r_minus: float = DEFAULT_R_MINUS,
    out_dir=None,
) -> dict:
    """Singles-count fluctuations against the OU theory.

    Part 1: pooled time-window variance of z from critical on-ray runs
    against sigma_z^2/(2 mu_z).  Part 2: marginal of the discrete OU chain
    at t = 5/mu_z against exact OU draws (two-sample KS).
    """
    t0 = time.time()
    params, crit = critical_params(N, r_plus, r_minus)
    sqrt_n = math.sqrt(N)
    result = exp_ensemble(
        N=N,
        replicas=replicas,
        seed=seed,
        t_max_slow=window_fast[1] / sqrt_n,
        grid_slow=grid_fast / sqrt_n,
        r_plus=r_plus,
        r_minus=r_minus,
        init=InitialCondition.on_ray(1.0),
        stop_on_extinction=False,
        dense_grid=True,
    )
    t_fast = result.times_slow * sqrt_n
    in_window = (t_fast >= window_fast[0]) & (t_fast <= window_fast[1])
    z_pool = result.marginal_frame()["z"][:, in_window].ravel()
    var_emp = float(np.var(z_pool))
    var_ref = crit.sigma_z2 / (2.0 * crit.mu_z)
    var_err = abs(var_emp / var_ref - 1.0)

    t_marg = 5.0 / crit.mu_z
    chain = sde.discrete_ou_marginals(
        chain_N, crit.mu_z, crit.sigma_z2, 0.0, t_marg, chain_replicas, seed + 1
    )
    ref = sde.ou_marginal_samples(
        crit.mu_z, crit.sigma_z2, 0.0, t_marg, chain_ref_samples, seed + 2
    )
    ks, _ = stats.ks_two_sample(chain, ref)

    passed = var_err < var_tolerance and ks < ks_tolerance
    verdict = artifacts.verdict_payload(
        "ou_fluctuations",
        {
            "N": N, "replicas": replicas, "window_fast": list(window_fast),
            "chain_N": chain_N, "chain_replicas": chain_replicas, "seed": seed,
        },
        {"var_rel_err": var_err, "var_emp": var_emp, "var_ref": var_ref, "chain_ks": ks},
        {"var_rel_err": var_tolerance, "chain_ks": ks_tolerance},
        passed,
    )
    _write_run(
        out_dir, "ou-check", verdict["inputs"], seed, t0, result.n_events.sum(),
        {"verdict.json": lambda p: artifacts.write_json(p, verdict)},
    )
    return verdict


def exp_collapse(
    N: int = 100_000,
    replicas: int = 200,
    x: float = 1.0,
    threshold: float = 0.05,
    t_max_slow: float = 4.0,
    grid_slow: float = 0.002,
    seed: int = 303,
    hit_fraction_required: float = 0.95,
    occupation_required: float = 0.99,
    r_plus: float = DEFAULT_R_PLUS,
    r_minus: float = DEFAULT_R_MINUS,
    out_dir=None,
) -> dict:
    """State-space collapse from an off-ray (infected-singles-only) start."""
    t0 = time.time()
    sqrt_n = math.sqrt(N)
    budget_slow = 50.0 * math.log(N) / sqrt_n
    result = exp_ensemble(
        N=N,
        replicas=replicas,
        seed=seed,
        t_max_slow=t_max_slow,
        grid_slow=grid_slow,
        r_plus=r_plus,
        r_minus=r_minus,
        init=InitialCondition.infected_singles_only(x),
        stop_on_extinction=True,
        h_floor=float(N) ** 0.2 / sqrt_n,
        dense_grid=True,
    )
    frame = result.marginal_frame()
    profile = stats.collapse_profile(
        result.times_slow, frame["Q"], frame["H"], result.n_live, N, threshold
    )
    hit_in_budget = np.nanmean(
        np.where(np.isnan(profile.first_hit_slow), np.inf, profile.first_hit_slow)
        <= budget_slow
    )
    occupation = profile.pooled_occupation
    passed = hit_in_budget >= hit_fraction_required and occupation >= occupation_required
    verdict = artifacts.verdict_payload(
        "state_space_collapse",
        {
            "N": N, "replicas": replicas, "x": x, "threshold": threshold,
            "budget_slow": budget_slow, "seed": seed,
        },
        {
            "hit_fraction": float(hit_in_budget),
            "pooled_occupation": occupation,
            "median_first_hit_slow": float(np.nanmedian(profile.first_hit_slow)),
        },
        {"hit_fraction": hit_fraction_required, "occupation": occupation_required},
        passed,
    )
    _write_run(
        out_dir, "collapse", verdict["inputs"], seed, t0, result.n_events.sum(),
        {"verdict.json": lambda p: artifacts.write_json(p, verdict)},
    )
    return verdict


def exp_averaging(
    n_values: Sequence[int] = (10_000, 100_000),
    replicas: int = 200,
    t_max_slow: float = 1.0,
    seed: int = 404,
    r_plus: float = DEFAULT_R_PLUS,
    r_minus: float = DEFAULT_R_MINUS,
    out_dir=None,
) -> dict:
    """Medians of |integral z_N i_N ds| on [0, T ^ tau0] across N."""
    t0 = time.time()
    integrals: dict[int, np.ndarray] = {}
    events = 0
    for j, N in enumerate(n_values):
        result = exp_ensemble(
            N=N,
            replicas=replicas,
            seed=seed + j,
            t_max_slow=t_max_slow,
            r_plus=r_plus,
            r_minus=r_minus,
            init=InitialCondition.on_ray(1.0),
            stop_on_extinction=True,
        )
        integrals[N] = result.int_zi_slow
        events += int(result.n_events.sum())
    verdict_data = stats.averaging_check(integrals)
    verdict = artifacts.verdict_payload(
        "averaging",
        {"n_values": list(n_values), "replicas": replicas, "t_max_slow": t_max_slow, "seed": seed},
        {"medians": verdict_data.medians},
        "median at largest N <= median at smallest N",
        verdict_data.decreasing,
    )
    _write_run(
        out_dir, "averaging", verdict["inputs"], seed, t0, events,
        {"verdict.json": lambda p: artifacts.write_json(p, verdict)},
    )
    return verdict


def exp_extinction_scaling(
    n_values: Sequence[int] = (10_000, 40_000, 160_000),
    replicas: int = 400,
    t_max_slow: float = 12.0,
    x: float = 1.0,
    seed: int = 505,
    ratio_band: tuple[float, float] = (0.75, 4.0 / 3.0),
    slope_band: tuple[float, float] = (0.4, 0.6),
    r_plus: float = DEFAULT_R_PLUS,
    r_minus: float = DEFAULT_R_MINUS,
    out_dir=None,
) -> dict:
    """Slow-time extinction medians across N (fast-time slope 1/2)."""
    t0 = time.time()
    medians = []
    events = 0
    for j, N in enumerate(sorted(n_values)):
        result = exp_ensemble(
            N=N,
            replicas=replicas,
            seed=seed + j,
            t_max_slow=t_max_slow,
            r_plus=r_plus,
            r_minus=r_minus,
            init=InitialCondition.on_ray(x),
            stop_on_extinction=True,
        )
        medians.append((N, stats.censored_median(result.tau0_slow)))
        events += int(result.n_events.sum())
    fit = stats.extinction_scaling(medians)
    ratios_ok = all(ratio_band[0] <= r <= ratio_band[1] for r in fit.ratios_slow)
    slope_ok = slope_band[0] <= fit.slope_fast <= slope_band[1]
    verdict = artifacts.verdict_payload(
        "extinction_scaling",
        {"n_values": list(n_values), "replicas": replicas, "x": x, "seed": seed,
         "t_max_slow": t_max_slow},
        {"medians_slow": fit.medians_slow, "ratios_slow": fit.ratios_slow,
         "slope_fast": fit.slope_fast},
        {"ratio_band": list(ratio_band), "slope_band": list(slope_band)},
        ratios_ok and slope_ok,
    )
    _write_run(
        out_dir, "extinction-scaling", verdict["inputs"], seed, t0, events,
        {"verdict.json": lambda p: artifacts.write_json(p, verdict)},
    )
    return verdict


def exp_diffusion_compare(
    N: int = 100_000,
    replicas: int = 1000,
    times_slow: Sequence[float] = (0.5, 1.0),
    em_paths: int = 10_000,
    em_dt: float = 1e-4,
    t_max_slow: float = 20.0,
    x: float = 1.0,
    seed: int = 606,
    ks_tolerance: float = 0.10,
    r_plus: float = DEFAULT_R_PLUS,
    r_minus: float = DEFAULT_R_MINUS,
    out_dir=None,
) -> dict:
    """Rescaled infecteds against the limiting square-root diffusion.

    Compares the marginals of i_N at the requested slow times and the
    extinction-time ECDFs, both against Euler-Maruyama with the derived
    (mu_X, sigma_X^2) started from alpha*x.
    """
    t0 = time.time()
    params, crit = critical_params(N, r_plus, r_minus)
    result = exp_ensemble(
        N=N,
        replicas=replicas,
        seed=seed,
        t_max_slow=t_max_slow,
        marginal_times_slow=list(times_slow),
        r_plus=r_plus,
        r_minus=r_minus,
        init=InitialCondition.on_ray(x),
        stop_on_extinction=True,
    )
    spec = sde.DiffusionSpec(
        mu=crit.mu_X, sigma2=crit.sigma_X2, x0=crit.alpha * x, dt=em_dt, t_max=t_max_slow
    )
    em_marg, em_tau0 = sde.limit_diffusion_ensemble(spec, em_paths, seed + 1, list(times_slow))

    frame = result.marginal_frame()
    ks_by_time = {}
    for idx, t in enumerate(sorted(times_slow)):
        ks, _ = stats.ks_two_sample(frame["i"][:, idx], em_marg[:, idx])
        ks_by_time[t] = ks
    sim_tau = np.where(np.isnan(result.tau0_slow), t_max_slow, result.tau0_slow)
    em_tau = np.where(np.isnan(em_tau0), t_max_slow, em_tau0)
    ks_tau, _ = stats.ks_two_sample(sim_tau, em_tau)

    passed = all(v < ks_tolerance for v in ks_by_time.values()) and ks_tau < ks_tolerance
    verdict = artifacts.verdict_payload(
        "diffusion_limit",
        {
            "N": N, "replicas": replicas, "times_slow": sorted(times_slow),
            "em_paths": em_paths, "em_dt": em_dt, "x": x, "seed": seed,
            "mu_X": crit.mu_X, "sigma_X2": crit.sigma_X2, "X0": crit.alpha * x,
        },
        {"ks_by_time": {str(k): v for k, v in ks_by_time.items()}, "ks_tau0": ks_tau},
        ks_tolerance,
        passed,
    )
    idx_tau = np.arange(len(sim_tau))
    _write_run(
        out_dir, "diffusion-compare", verdict["inputs"], seed, t0,
        result.n_events.sum(),
        {"verdict.json": lambda p: artifacts.write_json(p, verdict),
         "ensemble.csv": lambda p: artifacts.write_ensemble_csv(p, result),
         "sim_tau0.csv": lambda p: artifacts.write_path_csv(p, idx_tau, sim_tau),
         "em_tau0.csv": lambda p: artifacts.write_path_csv(
             p, np.arange(len(em_tau)), em_tau)},
    )
    return verdict


def exp_mfcp(
    N: int = 10_000,
    beta: float = 1.0,
    replicas: int = 2000,
    em_paths: int = 2000,
    em_dt: float = 1e-4,
    t_max_slow: float = 40.0,
    marginal_time: float = 1.0,
    seed: int = 707,
    ks_marginal_tolerance: float = 0.08,
    ks_tau_tolerance: float = 0.10,
    out_dir=None,
) -> dict:
    """Critical mean-field contact process against dx = -x^2 dt + sqrt(2x) dB."""
    t0 = time.time()
    marg, tau0 = sde.mfcp_ensemble(
        N, beta, N, replicas, seed, [marginal_time], t_max_slow=t_max_slow
    )
    spec = sde.DiffusionSpec(mu=1.0, sigma2=2.0, x0="infinity", dt=em_dt, t_max=t_max_slow)
    em_marg, em_tau0 = sde.limit_diffusion_ensemble(spec, em_paths, seed + 1, [marginal_time])
    ks_marg, _ = stats.ks_two_sample(marg[:, 0], em_marg[:, 0])
    sim_tau = np.where(np.isnan(tau0), t_max_slow, tau0)
    em_tau = np.where(np.isnan(em_tau0), t_max_slow, em_tau0)
    ks_tau, _ = stats.ks_two_sample(sim_tau, em_tau)
    passed = ks_marg < ks_marginal_tolerance and ks_tau < ks_tau_tolerance
    verdict = artifacts.verdict_payload(
        "mean_field_contact_process",
        {"N": N, "beta": beta, "replicas": replicas, "em_paths": em_paths,
         "marginal_time": marginal_time, "seed": seed},
        {"ks_marginal": ks_marg, "ks_tau0": ks_tau},
        {"ks_marginal": ks_marginal_tolerance, "ks_tau0": ks_tau_tolerance},
        passed,
    )
    _write_run(
        out_dir, "mfcp", verdict["inputs"], seed, t0, 0,
        {"verdict.json": lambda p: artifacts.write_json(p, verdict),
         "sim_marginal.csv": lambda p: artifacts.write_path_csv(
             p, np.arange(len(marg)), marg[:, 0]),
         "em_marginal.csv": lambda p: artifacts.write_path_csv(
             p, np.arange(len(em_marg)), em_marg[:, 0]),
         "sim_tau0.csv": lambda p: artifacts.write_path_csv(
             p, np.arange(len(sim_tau)), sim_tau),
         "em_tau0.csv": lambda p: artifacts.write_path_csv(
             p, np.arange(len(em_tau)), em_tau)},
    )
    return verdict
