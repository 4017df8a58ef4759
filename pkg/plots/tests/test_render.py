"""Secondary acceptance: all four figure kinds render from bundled fixtures."""

import json
from pathlib import Path

import pytest

from partnerplots.cli import main
from partnerplots.figures import FigureSpec, SchemaVersionError, compute_ecdf, render

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def test_trajectory_figure(tmp_path):
    out = tmp_path / "traj.png"
    written = render(FigureSpec(kind="trajectory", input_dir=FIXTURES / "traj_run", output=out))
    assert written == [out]
    assert out.stat().st_size > 0


def test_collapse_figure_overlays_all_replicas(tmp_path):
    out = tmp_path / "collapse.svg"
    written = render(FigureSpec(kind="collapse", input_dir=FIXTURES / "collapse_run", output=out))
    svg = written[0].read_text()
    for stem in ("trajectory-5", "trajectory-6", "trajectory-7"):
        assert stem in svg
    assert out.stat().st_size > 0


def test_ecdf_compare_annotates_verdict_ks_exactly(tmp_path):
    out = tmp_path / "ecdf.svg"
    render(FigureSpec(kind="ecdf_compare", input_dir=FIXTURES / "ecdf_run", output=out))
    svg = out.read_text()
    verdict = json.loads((FIXTURES / "ecdf_run" / "verdict.json").read_text())
    assert f"KS = {verdict['statistic']['ks_tau0']}" in svg


def test_ecdf_compare_identical_samples(tmp_path):
    out = tmp_path / "ecdf0.svg"
    render(
        FigureSpec(
            kind="ecdf_compare",
            input_dir=FIXTURES / "ecdf_identical",
            output=out,
            options={"sample_a": "sample_a.csv", "sample_b": "sample_b.csv"},
        )
    )
    svg = out.read_text()
    assert "KS = 0.0" in svg
    # the two ECDF curves coincide pointwise
    import numpy as np

    a = np.array(
        [float(r.split(",")[1]) for r in (FIXTURES / "ecdf_identical" / "sample_a.csv").read_text().splitlines()[2:]]
    )
    xa, fa = compute_ecdf(a)
    xb, fb = compute_ecdf(a.copy())
    assert (xa == xb).all() and (fa == fb).all()


def test_scaling_figure_labels_half_slope(tmp_path):
    # synthetic medians constant on the slow scale: fast medians ~ N^(1/2)
    out = tmp_path / "scaling.svg"
    render(FigureSpec(kind="scaling", input_dir=FIXTURES / "scaling_run", output=out))
    assert "slope 0.50" in out.read_text()


def test_extension_free_output_writes_png_and_svg(tmp_path):
    out = tmp_path / "fig"
    written = render(FigureSpec(kind="trajectory", input_dir=FIXTURES / "traj_run", output=out))
    assert {p.suffix for p in written} == {".png", ".svg"}
    assert all(p.stat().st_size > 0 for p in written)


def test_schema_mismatch_is_refused(tmp_path):
    bad = tmp_path / "bad_run"
    bad.mkdir()
    src = (FIXTURES / "traj_run" / "trajectory.csv").read_text().splitlines()
    src[0] = "# schema=partnersim.trajectory.v999"
    (bad / "trajectory.csv").write_text("\n".join(src) + "\n")
    with pytest.raises(SchemaVersionError, match="v999"):
        render(FigureSpec(kind="trajectory", input_dir=bad, output=tmp_path / "x.png"))


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        FigureSpec(kind="pie", input_dir=".", output=tmp_path / "x.png")


def test_cli_render_with_spec_file(tmp_path, capsys):
    spec = {
        "kind": "scaling",
        "input_dir": str(FIXTURES / "scaling_run"),
        "output": str(tmp_path / "cli_fig.png"),
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    assert main(["render", "--spec", str(spec_path)]) == 0
    assert (tmp_path / "cli_fig.png").stat().st_size > 0


def test_cli_render_with_flags_and_schema_error_code(tmp_path):
    assert (
        main(
            ["render", "--kind", "trajectory", "--input", str(FIXTURES / "traj_run"),
             "--out", str(tmp_path / "f.png")]
        )
        == 0
    )
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "trajectory.csv").write_text("t_slow,S\n0,1\n")
    assert (
        main(["render", "--kind", "trajectory", "--input", str(bad), "--out", str(tmp_path / "g.png")])
        == 65
    )


def test_determinism_same_bytes(tmp_path):
    outs = []
    for name in ("one.svg", "two.svg"):
        out = tmp_path / name
        render(FigureSpec(kind="scaling", input_dir=FIXTURES / "scaling_run", output=out))
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
