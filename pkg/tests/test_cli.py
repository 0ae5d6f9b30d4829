import json

import numpy as np

from dbar_akns.main import main
from dbar_akns.repositories.results_repository import load_report


SMALL = {
    "grid": {"nr": 16, "ntheta": 64},
    "x_grid": {"min": 0.5, "max": 1.0, "n": 3},
    "cauchy": {"nr": 16, "ntheta": 32, "n_targets": 5, "oracle_n": 64},
    "verify": {"nr": 4, "ntheta": 16, "trials": 10, "holder_pairs": 100, "x_samples": [0.5]},
}


def _config(tmp_path, **overrides) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({**SMALL, **overrides}), encoding="utf-8")
    return str(path)


def test_config_error_exits_4(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--config", str(tmp_path / "missing.json"), "--out", str(out)]) == 4
    assert main(["solve", "--config", _config(tmp_path, norm={"p": 3, "q": 3}), "--out", str(out)]) == 4


def test_cauchy_writes_both_schemes(tmp_path):
    out = tmp_path / "out"
    assert main(["cauchy", "--config", _config(tmp_path), "--out", str(out), "--deterministic"]) == 0

    lines = (out / "cauchy.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "k_re,k_im,value_re,value_im,scheme,h"
    assert len(lines) == 1 + 2 * 5
    assert [line.split(",")[4] for line in lines[1:3]] == ["corrected", "oracle"]

    report = load_report(out / "report.json")
    assert report.provenance.command == "cauchy"
    assert report.provenance.created_at is None
    assert report.get("cauchy_linearity").passed


def test_deterministic_runs_are_byte_identical(tmp_path):
    config = _config(tmp_path, preset="zero")
    bodies = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["reconstruct", "--config", config, "--out", str(out), "--deterministic"]) == 0
        bodies.append(((out / "reconstruct.csv").read_bytes(), (out / "report.json").read_bytes()))
    assert bodies[0] == bodies[1]


def test_solve_on_zero_data(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--config", _config(tmp_path, preset="zero"), "--out", str(out)]) == 0

    lines = (out / "solve.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,solver_iterations,residual,dbar_residual,contraction_ratio"
    assert len(lines) == 1 + 3
    report = load_report(out / "report.json")
    assert report.get("operator_norm_estimate").passed
    assert report.provenance.created_at is not None


def test_solve_past_divergence_exits_2(tmp_path):
    out = tmp_path / "out"
    config = _config(tmp_path, amplitudes=[1e5, 1e5], grid={"nr": 6, "ntheta": 64})
    assert main(["solve", "--config", config, "--out", str(out), "--deterministic"]) == 2

    report = load_report(out / "report.json")
    failed = [c for c in report.failed() if c.name.startswith("neumann_")]
    assert failed and all(c.details["error"] == "Divergence" for c in failed)
    assert (out / "solve.csv").read_text(encoding="utf-8").splitlines() == [
        "x,solver_iterations,residual,dbar_residual,contraction_ratio"
    ]


def test_cauchy_exits_1_when_a_check_fails(tmp_path, monkeypatch):
    monkeypatch.setattr("dbar_akns.pipeline.commands.closed_form_chi_disk", lambda k: np.asarray(k) + 1.0)
    out = tmp_path / "out"
    assert main(["cauchy", "--config", _config(tmp_path), "--out", str(out)]) == 1

    report = load_report(out / "report.json")
    assert not report.get("cauchy_closed_form_corrected").passed
    assert report.get("cauchy_linearity").passed
