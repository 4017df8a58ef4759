"""Artifact round trips and schema tagging."""

import numpy as np
import pytest

from partnersim import artifacts
from partnersim.experiments import critical_params, exp_simulate


def test_csv_round_trip(tmp_path):
    path = tmp_path / "x.csv"
    artifacts.write_csv(path, "partnersim.path.v1", ["t", "value"], [[0.0, 1.5], [1.0, float("nan")]])
    schema, header, rows = artifacts.read_csv(path)
    assert schema == "partnersim.path.v1"
    assert header == ["t", "value"]
    assert rows[0] == ["0.0", "1.5"]
    assert rows[1][1] == "nan"


def test_read_csv_requires_schema(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,value\n0,1\n")
    with pytest.raises(ValueError, match="schema"):
        artifacts.read_csv(path)


def test_fresh_dir_refuses_existing(tmp_path):
    d = tmp_path / "outdir"
    artifacts.fresh_dir(d)
    with pytest.raises(artifacts.OutputDirExistsError):
        artifacts.fresh_dir(d)


def test_trajectory_csv_has_documented_columns(tmp_path):
    traj = exp_simulate(N=2500, seed=1, t_max_slow=0.1, grid_slow=0.05)
    path = tmp_path / "traj.csv"
    artifacts.write_trajectory_csv(path, traj)
    schema, header, rows = artifacts.read_csv(path)
    assert schema == artifacts.TRAJECTORY_SCHEMA
    assert header == artifacts.TRAJECTORY_COLUMNS
    assert len(rows) == len(traj.t_slow)
    # integer count columns stay integral in the file
    assert all(rows[0][c].lstrip("-").isdigit() for c in range(1, 6))


def test_float_formatting_round_trips_exactly():
    vals = [0.1, 1 / 3, 2**-52, 1e300]
    for v in vals:
        assert float(artifacts._fmt(v)) == v
