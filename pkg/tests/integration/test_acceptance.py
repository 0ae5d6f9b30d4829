import csv
import json

from termcolor import colored

from dbar_akns.main import main
from dbar_akns.repositories.results_repository import load_report


def _run(tmp_path, command: str, body: dict, *flags: str) -> int:
    config = tmp_path / f"{command}.json"
    config.write_text(json.dumps(body), encoding="utf-8")
    out = tmp_path / command
    print(colored(f"▶ dbar-akns {command} {' '.join(flags)}", "cyan", attrs=["bold"]))
    return main([command, "--config", str(config), "--out", str(out), *flags])


def _print_report(path):
    report = load_report(path)
    for check in report.checks:
        mark = colored("✓", "green") if check.passed else colored("✗", "red")
        print(f"  {mark} {check.name}: observed {check.observed:.4g} vs {check.bound_or_target:.4g}")
    return report


def test_verify_on_zero_preset_passes(tmp_path):
    """Every check of the battery holds for zero spectral data"""
    code = _run(tmp_path, "verify", {"preset": "zero"}, "--deterministic")
    report = _print_report(tmp_path / "verify" / "report.json")

    assert report.checks, "verify wrote no check records"
    assert code == 0, f"failed checks: {[c.name for c in report.failed()]}"
    print(colored(f"✓ {len(report.checks)} checks passed", "green"))


def test_reconstruct_default_fixture(tmp_path):
    """64 x values, every residual at the solver tolerance level"""
    body = {"grid": {"nr": 8, "ntheta": 256}}
    assert _run(tmp_path, "reconstruct", body) == 0

    with open(tmp_path / "reconstruct" / "reconstruct.csv", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 64
    worst = max(float(r["residual"]) for r in rows)
    assert worst <= 1e-8, f"worst residual {worst}"
    print(colored(f"✓ {len(rows)} rows, worst residual {worst:.3e}", "green"))
    assert all(float(r["x"]) != 0 for r in rows)

    report = _print_report(tmp_path / "reconstruct" / "report.json")
    assert report.get("reconstruct_complete").passed


def test_verify_on_default_bump_passes(tmp_path):
    """The full battery on the default annulus bump, sample counts cut down"""
    body = {"verify": {"holder_pairs": 2000, "n_fields": 4, "lemma1_draws": 10,
                       "cauchy_nr": 128, "cauchy_ntheta": 128}}
    code = _run(tmp_path, "verify", body, "--deterministic")
    report = _print_report(tmp_path / "verify" / "report.json")

    for name in ("cauchy_closed_form", "rtc_direct_oracle_x=0.5", "dbar_residual_refinement_x=0.5",
                 "akns_residual_refinement_x=-0.5", "lemma1_log_growth_1_1"):
        assert report.get(name) is not None, f"{name} missing from the report"
    assert code == 0, f"failed checks: {[c.name for c in report.failed()]}"
    print(colored(f"✓ {len(report.checks)} checks passed", "green"))
