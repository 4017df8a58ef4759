"""The four figure kinds rendered from artifact directories.

trajectory    panels of i, h, z, Q against slow time from trajectory.csv
collapse      overlay of Q decay (log scale) from trajectory*.csv files
ecdf_compare  empirical vs reference ECDFs with the KS value taken
              verbatim from the run's verdict JSON
scaling       log-log extinction-time medians with a least-squares slope

Rendering is deterministic: fixed styling, hashed SVG ids, no timestamps.
Artifacts are validated against their schema tag and refused on mismatch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "partnerplots"

KNOWN_SCHEMAS = {
    "trajectory": "partnersim.trajectory.v1",
    "path": "partnersim.path.v1",
}

FIGURE_KINDS = ("trajectory", "collapse", "ecdf_compare", "scaling")


class SchemaVersionError(ValueError):
    """Artifact carries an unexpected (or missing) schema version."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    input_dir: str | Path
    output: str | Path
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}")


def read_artifact_csv(path: Path, expected_schema: str):
    """Schema-checked CSV reader returning (header, float column arrays)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise SchemaVersionError(f"{path}: no schema tag")
        schema = first.split("=", 1)[1]
        if schema != expected_schema:
            raise SchemaVersionError(
                f"{path}: schema {schema!r} does not match expected {expected_schema!r}"
            )
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    cols = {
        name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(header)
    }
    return header, cols


def load_verdict(input_dir: Path) -> dict:
    path = input_dir / "verdict.json"
    if not path.exists():
        raise FileNotFoundError(f"{input_dir}: no verdict.json")
    return json.loads(path.read_text())


def compute_ecdf(sample: np.ndarray):
    x = np.sort(sample)
    return x, np.arange(1, len(x) + 1) / len(x)


def _save(fig, output: Path) -> list[Path]:
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    if output.suffix.lower() in (".png", ".svg"):
        targets = [output]
    else:
        targets = [output.with_suffix(".png"), output.with_suffix(".svg")]
    for t in targets:
        fig.savefig(t, metadata={"Date": None} if t.suffix == ".svg" else None)
    plt.close(fig)
    return targets


def _render_trajectory(spec: FigureSpec) -> list[Path]:
    input_dir = Path(spec.input_dir)
    _, cols = read_artifact_csv(input_dir / "trajectory.csv", KNOWN_SCHEMAS["trajectory"])
    t = cols["t_slow"]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, key, label in zip(
        axes.ravel(), ["i", "h", "z", "Q"],
        ["rescaled infecteds i", "h = H/sqrt(N)", "singles fluctuation z", "ray distance Q"],
    ):
        ax.plot(t, cols[key], lw=0.9, color="#1f77b4")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("slow time")
    fig.suptitle(spec.options.get("title", "trajectory observables"))
    fig.tight_layout()
    return _save(fig, spec.output)


def _render_collapse(spec: FigureSpec) -> list[Path]:
    input_dir = Path(spec.input_dir)
    files = sorted(input_dir.glob("trajectory*.csv"))
    if not files:
        raise FileNotFoundError(f"{input_dir}: no trajectory*.csv files")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in files:
        _, cols = read_artifact_csv(path, KNOWN_SCHEMAS["trajectory"])
        q = cols["Q"]
        mask = np.isfinite(q) & (q > 0)
        ax.plot(cols["t_slow"][mask], q[mask], lw=0.9, label=path.stem)
    threshold = float(spec.options.get("threshold", 0.05))
    ax.axhline(threshold, color="k", ls="--", lw=0.8, label=f"threshold {threshold}")
    ax.set_yscale("log")
    ax.set_xlabel("slow time")
    ax.set_ylabel("Q (distance from invariant ray)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, spec.output)


def _render_ecdf_compare(spec: FigureSpec) -> list[Path]:
    input_dir = Path(spec.input_dir)
    file_a = input_dir / spec.options.get("sample_a", "sim_tau0.csv")
    file_b = input_dir / spec.options.get("sample_b", "em_tau0.csv")
    _, cols_a = read_artifact_csv(file_a, KNOWN_SCHEMAS["path"])
    _, cols_b = read_artifact_csv(file_b, KNOWN_SCHEMAS["path"])
    verdict = load_verdict(input_dir)
    ks_key = spec.options.get("ks_key", "ks_tau0")
    stat = verdict["statistic"]
    ks_value = stat[ks_key] if isinstance(stat, dict) else stat

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for cols, label, color in [
        (cols_a, file_a.stem, "#1f77b4"),
        (cols_b, file_b.stem, "#d62728"),
    ]:
        x, f = compute_ecdf(cols["value"])
        ax.step(x, f, where="post", label=label, color=color, lw=1.0)
    ax.annotate(
        f"KS = {ks_value}",
        xy=(0.97, 0.08),
        xycoords="axes fraction",
        ha="right",
        fontsize=10,
        bbox={"boxstyle": "round", "fc": "white", "ec": "0.6"},
    )
    ax.set_xlabel("value")
    ax.set_ylabel("ECDF")
    ax.legend(fontsize=8, loc="lower right", bbox_to_anchor=(1.0, 0.18))
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, spec.output)


def _render_scaling(spec: FigureSpec) -> list[Path]:
    input_dir = Path(spec.input_dir)
    verdict = load_verdict(input_dir)
    medians = verdict["statistic"]["medians_slow"]
    n_values = np.array([float(n) for n, _ in medians])
    fast = np.array([float(m) * math.sqrt(float(n)) for n, m in medians])
    slope, intercept = np.polyfit(np.log(n_values), np.log(fast), 1)

    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.loglog(n_values, fast, "o", color="#1f77b4", label="median extinction time (fast)")
    grid = np.linspace(np.log(n_values[0]), np.log(n_values[-1]), 50)
    ax.loglog(np.exp(grid), np.exp(intercept + slope * grid), "-", color="#d62728",
              label=f"fit: slope {slope:.2f}")
    ax.set_xlabel("population size N")
    ax.set_ylabel("median extinction time (original scale)")
    ax.legend(fontsize=9)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    return _save(fig, spec.output)


_RENDERERS = {
    "trajectory": _render_trajectory,
    "collapse": _render_collapse,
    "ecdf_compare": _render_ecdf_compare,
    "scaling": _render_scaling,
}


def render(spec: FigureSpec) -> list[Path]:
    """Render one figure spec; returns the written image paths."""
    return _RENDERERS[spec.kind](spec)
