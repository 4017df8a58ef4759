"""Statistics that turn ensembles into verdicts.

Everything here is a deterministic function of its inputs.  Medians are
used for extinction times throughout: the critical tails are heavy, and a
median is stable at desk-scale replica counts.  Replicas that never went
extinct enter order statistics as +inf; medians are refused once the
censored fraction reaches one half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class CensoredMedianError(RuntimeError):
    """Too many censored replicas for a valid median; raise the horizon."""


def ecdf(sample: Sequence[float]):
    """Exact empirical CDF: (sorted values, cumulative fractions)."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    return x, np.arange(1, len(x) + 1) / len(x)


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Sup-distance between the ECDFs of two samples.

    Returns (statistic, n_eff) with n_eff = |a||b|/(|a|+|b|).  Exact (no
    binning); ties are handled by evaluating both ECDFs on the pooled
    support.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample requires non-empty samples")
    xs = np.sort(a)
    ys = np.sort(b)
    grid = np.concatenate([xs, ys])
    fa = np.searchsorted(xs, grid, side="right") / xs.size
    fb = np.searchsorted(ys, grid, side="right") / ys.size
    stat = float(np.max(np.abs(fa - fb)))
    n_eff = a.size * b.size / (a.size + b.size)
    return stat, n_eff


def censored_median(values: Sequence[float]) -> float:
    """Median with NaN entries treated as +inf (censored at the horizon)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty sample")
    filled = np.where(np.isnan(v), np.inf, v)
    med = float(np.median(filled))
    if not math.isfinite(med):
        raise CensoredMedianError(
            f"median censored: {int(np.isnan(v).sum())}/{v.size} replicas not extinct"
        )
    return med


@dataclass(frozen=True)
class ScalingFit:
    slope_fast: float            # log(median fast-time tau0) vs log N
    medians_slow: list[tuple[int, float]]
    ratios_slow: list[float]     # consecutive slow-time median ratios


def extinction_scaling(medians: Iterable[tuple[int, float]]) -> ScalingFit:
    """Least-squares scaling exponent of the extinction time.

    Input: (N, median tau0 on the slow scale).  A slow-scale median that is
    N-independent corresponds to fast-time scaling N^(1/2) exactly.
    """
    pts = sorted((int(n), float(m)) for n, m in medians)
    if len(pts) < 3:
        raise ValueError("need medians for at least 3 population sizes")
    if any((not math.isfinite(m)) for _, m in pts):
        raise CensoredMedianError("censored median in scaling input; raise the horizon")
    log_n = np.log([n for n, _ in pts])
    log_fast = np.log([m * math.sqrt(n) for n, m in pts])
    slope = float(np.polyfit(log_n, log_fast, 1)[0])
    ratios = [pts[i + 1][1] / pts[i][1] for i in range(len(pts) - 1)]
    return ScalingFit(slope_fast=slope, medians_slow=pts, ratios_slow=ratios)


@dataclass(frozen=True)
class CollapseProfile:
    first_hit_slow: np.ndarray   # per replica; NaN if the threshold was never hit
    occupation: np.ndarray       # post-hit fraction of eligible samples with Q <= 2*threshold
    n_post: np.ndarray           # eligible post-hit sample count per replica
    threshold: float
    h_cut_abs: float

    @property
    def pooled_occupation(self) -> float:
        """Fraction of all post-hit eligible samples (across replicas) with
        Q <= 2*threshold."""
        total = int(self.n_post.sum())
        if total == 0:
            return float("nan")
        good = np.nansum(self.occupation * self.n_post)
        return float(good / total)


def collapse_profile(
    times_slow: np.ndarray,
    q: np.ndarray,
    big_h: np.ndarray,
    n_live: np.ndarray,
    N: int,
    threshold: float,
) -> CollapseProfile:
    """Per-replica first time Q <= threshold and post-hit occupancy.

    ``q`` and ``big_h`` are (replicas, n_times) sample arrays; only samples
    with H > N^(1/5) (and genuinely reached, per ``n_live``) count, matching
    the stopping time the collapse statement is formulated under.
    """
    n_rep, n_t = q.shape
    h_cut = float(N) ** 0.2
    first_hit = np.full(n_rep, np.nan)
    occupation = np.full(n_rep, np.nan)
    n_post_all = np.zeros(n_rep, dtype=np.int64)
    for r in range(n_rep):
        live = np.zeros(n_t, dtype=bool)
        live[: n_live[r]] = True
        eligible = live & (big_h[r] > h_cut) & np.isfinite(q[r])
        hits = eligible & (q[r] <= threshold)
        if not hits.any():
            continue
        k = int(np.argmax(hits))
        first_hit[r] = times_slow[k]
        post = eligible.copy()
        post[:k] = False
        n_post = int(post.sum())
        n_post_all[r] = n_post
        if n_post:
            occupation[r] = float((q[r][post] <= 2.0 * threshold).sum() / n_post)
    return CollapseProfile(
        first_hit_slow=first_hit,
        occupation=occupation,
        n_post=n_post_all,
        threshold=threshold,
        h_cut_abs=h_cut,
    )


@dataclass(frozen=True)
class AveragingVerdict:
    medians: list[tuple[int, float]]   # (N, median |integral|)
    decreasing: bool                   # largest-N median <= smallest-N median


def averaging_check(integrals_by_n: dict[int, Sequence[float]]) -> AveragingVerdict:
    """Median |integral of z_N i_N ds| per population size.

    The integrals are accumulated exactly between events during simulation.
    The verdict compares the extreme population sizes, which should span a
    factor >= 10 for the decrease to be resolvable.
    """
    if len(integrals_by_n) < 2:
        raise ValueError("need integrals for at least two population sizes")
    meds = sorted(
        (int(n), float(np.median(np.abs(np.asarray(v, dtype=np.float64)))))
        for n, v in integrals_by_n.items()
    )
    decreasing = meds[-1][1] <= meds[0][1]
    return AveragingVerdict(medians=meds, decreasing=decreasing)
