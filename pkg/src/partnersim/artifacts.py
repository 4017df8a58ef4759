"""Artifact emission: CSV tables, JSON manifests and verdicts.

Conventions: UTF-8, RFC-4180-style CSV with a leading ``# schema=...``
comment line naming the schema version, JSON with sorted keys.  Floats are
written with repr precision so identical runs produce identical bytes.
A run directory is created fresh; an existing one is refused rather than
overwritten.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from . import __version__

TRAJECTORY_SCHEMA = "partnersim.trajectory.v1"
ENSEMBLE_SCHEMA = "partnersim.ensemble.v1"
PATH_SCHEMA = "partnersim.path.v1"

TRAJECTORY_COLUMNS = [
    "t_slow", "S", "I", "J", "K", "L",
    "y", "z", "i", "j", "k", "h", "U", "V", "W", "Q",
]


class OutputDirExistsError(FileExistsError):
    """Refusing to write into an existing run directory."""


def fresh_dir(path: str | Path) -> Path:
    p = Path(path)
    if p.exists():
        raise OutputDirExistsError(f"output directory already exists: {p}")
    p.mkdir(parents=True, exist_ok=False)
    return p


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return "nan" if np.isnan(x) else repr(x)
    return str(v)


def write_csv(path: Path, schema: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema={schema}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path: str | Path):
    """Read a schema-tagged CSV back into (schema, header, list of rows)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise ValueError(f"{path}: missing schema comment line")
        schema = first.split("=", 1)[1]
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    return schema, header, rows


def write_trajectory_csv(path: Path, trajectory) -> None:
    # only samples the run genuinely reached: after an early stop the
    # remaining grid slots hold a frozen singles count, not a sample
    n_rows = trajectory.terminal.n_live_samples
    frame = trajectory.frame()
    counts = trajectory.counts
    rows = (
        [trajectory.t_slow[n], *counts[n]]
        + [frame[c][n] for c in ["y", "z", "i", "j", "k", "h", "U", "V", "W", "Q"]]
        for n in range(n_rows)
    )
    write_csv(path, TRAJECTORY_SCHEMA, TRAJECTORY_COLUMNS, rows)


def write_ensemble_csv(path: Path, result) -> None:
    frame = result.marginal_frame()
    header = [
        "replica", "stream_id", "stop_reason", "tau0_slow", "censored",
        "n_events", "int_zi_slow", "sup_abs_z", "t_sup_z_slow", "sup_h", "t_sup_h_slow",
    ]
    obs = ["h", "i", "z", "Q"]
    for t in result.times_slow:
        for o in obs:
            header.append(f"{o}@{_fmt(float(t))}")

    def rows():
        for r in range(result.replicas):
            row = [
                r,
                int(result.stream_ids[r]),
                result.stop_reason[r],
                result.tau0_slow[r],
                bool(result.censored[r]),
                int(result.n_events[r]),
                result.int_zi_slow[r],
                result.sup_abs_z[r],
                result.t_sup_z_slow[r],
                result.sup_h[r],
                result.t_sup_h_slow[r],
            ]
            for n in range(len(result.times_slow)):
                for o in obs:
                    row.append(frame[o][r, n])
            yield row

    write_csv(path, ENSEMBLE_SCHEMA, header, rows())


def write_path_csv(path: Path, t: np.ndarray, x: np.ndarray) -> None:
    write_csv(path, PATH_SCHEMA, ["t", "value"], zip(t, x))


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, allow_nan=True)
        fh.write("\n")


def write_manifest(
    out_dir: Path, command: str, config: dict, master_seed: int,
    wall_time_s: float, n_events_total: int,
) -> None:
    write_json(
        out_dir / "manifest.json",
        {
            "command": command,
            "config": config,
            "master_seed": master_seed,
            "version": __version__,
            "schemas": {
                "trajectory": TRAJECTORY_SCHEMA,
                "ensemble": ENSEMBLE_SCHEMA,
                "path": PATH_SCHEMA,
            },
            "wall_time_s": wall_time_s,
            "n_events_total": n_events_total,
            "created_unix": int(time.time()),
        },
    )


def verdict_payload(check: str, inputs: dict, statistic, threshold, passed: bool, extra: dict | None = None) -> dict:
    out = {
        "check": check,
        "inputs": inputs,
        "statistic": statistic,
        "threshold": threshold,
        "pass": bool(passed),
    }
    if extra:
        out["extra"] = extra
    return out
