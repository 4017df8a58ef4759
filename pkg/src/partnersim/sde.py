"""Reference processes the simulator is compared against.

* the limiting square-root diffusion dX = -mu X^2 dt + sigma sqrt(X) dB
  (full-truncation Euler-Maruyama; no exact sampler exists for this drift),
* the critical mean-field contact process (exact birth-death chain),
* the Ornstein-Uhlenbeck process (exact Gaussian transitions),
* the spatially discrete OU chain on the lattice 2Z/sqrt(N).

"Start from infinity" is realized as x0 = 1e3: by the mean bound
E[X_t | X_0 = x] <= 1/(mu t + 1/x), marginals at t >= 0.1 are insensitive
to the starting level at Monte-Carlo resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .rng import stream_words

X_FROM_INFINITY = 1e3


@dataclass(frozen=True)
class DiffusionSpec:
    mu: float
    sigma2: float
    x0: float | str  # a level, or "infinity"
    dt: float = 1e-4
    t_max: float = 10.0

    def __post_init__(self):
        if self.dt > 1e-3 * self.t_max:
            raise ValueError("dt must be <= 1e-3 * t_max")
        if self.mu <= 0 or self.sigma2 < 0:
            raise ValueError("mu must be positive and sigma2 non-negative")

    @property
    def x0_value(self) -> float:
        if self.x0 == "infinity":
            return X_FROM_INFINITY
        x = float(self.x0)
        if x < 0:
            raise ValueError("x0 must be non-negative")
        return x


@dataclass(frozen=True)
class Path:
    t: np.ndarray
    x: np.ndarray
    tau0: float | None  # absorption / extinction time, None if censored


def simulate_limit_diffusion(spec: DiffusionSpec, seed: int, record_stride: int | None = None) -> Path:
    """One full-truncation Euler-Maruyama path with its absorption time.

    X_{n+1} = X_n - mu*max(X_n,0)^2*dt + sigma*sqrt(max(X_n,0))*sqrt(dt)*xi;
    the path is set to 0 from the first nonpositive step on, and tau0 is
    recorded there (bias O(dt)).
    """
    n_steps = int(round(spec.t_max / spec.dt))
    if record_stride is None:
        record_stride = max(1, n_steps // 20000)
    sample_steps = np.arange(0, n_steps + 1, record_stride, dtype=np.int64)
    out = np.empty(len(sample_steps), dtype=np.float64)
    s_lo, s_hi, k0, k1 = stream_words(seed, 0)
    tau0, _ = _kernels.em_kernel(
        spec.x0_value,
        spec.mu,
        math.sqrt(spec.sigma2),
        spec.dt,
        n_steps,
        sample_steps,
        s_lo,
        s_hi,
        k0,
        k1,
        out,
    )
    return Path(t=sample_steps * spec.dt, x=out, tau0=tau0 if tau0 >= 0 else None)


def limit_diffusion_ensemble(
    spec: DiffusionSpec, n_paths: int, seed: int, marginal_times: Sequence[float]
):
    """Marginals and absorption times of ``n_paths`` EM paths.

    Returns ``(marginals, tau0)`` with marginals of shape
    (n_paths, len(marginal_times)); censored absorption times are NaN.
    """
    n_steps = int(round(spec.t_max / spec.dt))
    times = np.asarray(sorted(marginal_times), dtype=np.float64)
    sample_steps = np.round(times / spec.dt).astype(np.int64)
    if len(sample_steps) and sample_steps[-1] > n_steps:
        raise ValueError("marginal time beyond t_max")
    words = np.empty((n_paths, 4), dtype=np.uint32)
    for r in range(n_paths):
        words[r] = stream_words(seed, r)
    out = np.empty((n_paths, len(sample_steps)), dtype=np.float64)
    tau0 = np.empty(n_paths, dtype=np.float64)
    finals = np.empty(n_paths, dtype=np.float64)
    _kernels.em_ensemble(
        spec.x0_value,
        spec.mu,
        math.sqrt(spec.sigma2),
        spec.dt,
        n_steps,
        sample_steps,
        words,
        out,
        tau0,
        finals,
    )
    tau0 = np.where(tau0 >= 0, tau0, np.nan)
    return out, tau0


def simulate_mfcp(
    N: int,
    beta: float,
    X0: int,
    seed: int,
    t_max_slow: float = 10.0,
    grid_slow: float = 0.01,
) -> Path:
    """Exact mean-field contact process, reported on the slow scale:
    x_N(t) = X(sqrt(N) t)/sqrt(N)."""
    if not (0 <= X0 <= N):
        raise ValueError("need 0 <= X0 <= N")
    sqrt_n = math.sqrt(N)
    t_slow = np.arange(int(math.floor(t_max_slow / grid_slow + 1e-9)) + 1) * grid_slow
    out = np.empty(len(t_slow), dtype=np.int64)
    s_lo, s_hi, k0, k1 = stream_words(seed, 0)
    tau0, _ = _kernels.mfcp_kernel(
        X0, beta, N, t_max_slow * sqrt_n, t_slow * sqrt_n, s_lo, s_hi, k0, k1, out
    )
    return Path(t=t_slow, x=out / sqrt_n, tau0=tau0 / sqrt_n if tau0 >= 0 else None)


def mfcp_ensemble(
    N: int,
    beta: float,
    X0: int,
    n_paths: int,
    seed: int,
    marginal_times_slow: Sequence[float],
    t_max_slow: float = 10.0,
):
    """Slow-scale marginals x_N(t) and extinction times of an MFCP ensemble."""
    sqrt_n = math.sqrt(N)
    times = np.asarray(sorted(marginal_times_slow), dtype=np.float64)
    words = np.empty((n_paths, 4), dtype=np.uint32)
    for r in range(n_paths):
        words[r] = stream_words(seed, r)
    out = np.empty((n_paths, len(times)), dtype=np.int64)
    tau0 = np.empty(n_paths, dtype=np.float64)
    finals = np.empty(n_paths, dtype=np.int64)
    _kernels.mfcp_ensemble(
        X0, beta, N, t_max_slow * sqrt_n, times * sqrt_n, words, out, tau0, finals
    )
    tau0_slow = np.where(tau0 >= 0, tau0 / sqrt_n, np.nan)
    return out / sqrt_n, tau0_slow


def _numpy_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def simulate_ou(
    mu_z: float, sigma_z2: float, z0: float, t_max: float, dt: float, seed: int
) -> Path:
    """Statistically exact OU path for dz = -mu_z z dt + sigma_z dB."""
    n = int(round(t_max / dt))
    decay = math.exp(-mu_z * dt)
    sd = math.sqrt(sigma_z2 * (1.0 - decay * decay) / (2.0 * mu_z))
    xi = _numpy_rng(seed).standard_normal(n)
    z = np.empty(n + 1)
    z[0] = z0
    for step in range(n):
        z[step + 1] = z[step] * decay + sd * xi[step]
    return Path(t=np.arange(n + 1) * dt, x=z, tau0=None)


def ou_marginal_samples(
    mu_z: float, sigma_z2: float, z0: float, t: float, n: int, seed: int
) -> np.ndarray:
    """Exact draws of the OU marginal at time t (no path integration)."""
    mean = z0 * math.exp(-mu_z * t)
    var = sigma_z2 * (1.0 - math.exp(-2.0 * mu_z * t)) / (2.0 * mu_z)
    return mean + math.sqrt(var) * _numpy_rng(seed).standard_normal(n)


def discrete_ou_lattice_rates(N: int, mu_z: float, sigma_z2: float, z: float):
    """Jump rates (up, down) of the discrete OU chain at state z, clipped at 0."""
    sqrt_n = math.sqrt(N)
    base = sigma_z2 * N / 8.0
    up = base - mu_z * sqrt_n * z / 4.0
    down = base + mu_z * sqrt_n * z / 4.0
    return max(up, 0.0), max(down, 0.0)


def simulate_discrete_ou_chain(
    N: int,
    mu_z: float,
    sigma_z2: float,
    z0: float,
    seed: int,
    t_max: float = 10.0,
    grid: float = 0.01,
) -> Path:
    """Exact CTMC on the lattice 2Z/sqrt(N) mimicking the OU process."""
    sqrt_n = math.sqrt(N)
    m0 = int(math.floor(sqrt_n * z0 / 2.0))
    t = np.arange(int(math.floor(t_max / grid + 1e-9)) + 1) * grid
    out = np.empty(len(t), dtype=np.float64)
    s_lo, s_hi, k0, k1 = stream_words(seed, 0)
    _kernels.discrete_ou_kernel(m0, N, mu_z, sigma_z2, t_max, t, s_lo, s_hi, k0, k1, out)
    return Path(t=t, x=out, tau0=None)


def discrete_ou_marginals(
    N: int, mu_z: float, sigma_z2: float, z0: float, t: float, n_paths: int, seed: int
) -> np.ndarray:
    """Marginal of the discrete OU chain at time t over an ensemble."""
    sqrt_n = math.sqrt(N)
    m0 = int(math.floor(sqrt_n * z0 / 2.0))
    words = np.empty((n_paths, 4), dtype=np.uint32)
    for r in range(n_paths):
        words[r] = stream_words(seed, r)
    out = np.empty((n_paths, 1), dtype=np.float64)
    finals = np.empty(n_paths, dtype=np.float64)
    _kernels.discrete_ou_ensemble(
        m0, N, mu_z, sigma_z2, t, np.array([t], dtype=np.float64), words, out, finals
    )
    return out[:, 0]
