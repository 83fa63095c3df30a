"""Command-line interface: outputs, exit codes, and byte determinism."""

import json

import semesim
from semesim.cli import main

HALLWAY = str(semesim.bundled_path("hallway_a"))
FREE = str(semesim.bundled_path("free_space"))


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# angles / tco / validate
# ---------------------------------------------------------------------------


def test_angles_prints_deployment_values(capsys):
    code, out, _ = run(capsys, "angles", "--scenario", HALLWAY)
    assert code == 0
    assert out.strip() == "theta_i=14.5 phi_i=116.0 theta_r=4.3 phi_r=-106.1"


def test_tco_prints_reference_saving(capsys, tmp_path):
    code, out, _ = run(capsys, "tco", "--dt-years", "5", "--out", str(tmp_path))
    assert code == 0
    assert "saving_usd=1245.00" in out
    assert "saving_per_m2_usd=18.44" in out
    assert "relative_saving_pct=92.2" in out
    doc = json.loads((tmp_path / "tco.json").read_text())
    assert doc["total_std_usd"] == 1350.0
    assert doc["total_seme_usd"] == 105.0


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", "--scenario", HALLWAY)
    assert code == 0
    assert "ok" in out


def test_validate_malformed_field_named(capsys, tmp_path):
    doc = json.loads(semesim.bundled_path("hallway_a").read_text())
    doc["access_points"][0]["frequency"] = "fast"
    bad = tmp_path / "bad.scn"
    bad.write_text(json.dumps(doc))
    code, _, err = run(capsys, "validate", "--scenario", str(bad))
    assert code == 1
    assert "frequency" in err


def test_missing_scenario_file_is_io_error(capsys):
    code, _, err = run(capsys, "validate", "--scenario", "/nonexistent/file.scn")
    assert code == 2


def test_unreadable_costs_file(capsys):
    code, _, err = run(capsys, "tco", "--costs", "/nonexistent/costs.json")
    assert code == 2


# ---------------------------------------------------------------------------
# simulate / pattern / sweeps
# ---------------------------------------------------------------------------


def test_simulate_emits_all_artifacts(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--scenario", HALLWAY, "--out", str(tmp_path))
    assert code == 0
    for name in (
        "power_ref.csv",
        "power_seme.csv",
        "binary_ref.csv",
        "binary_seme.csv",
        "cdf_ref_hallway_a.csv",
        "cdf_seme_hallway_a.csv",
        "delta_map.csv",
        "stats.json",
    ):
        assert (tmp_path / name).exists(), name
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["min_db"] >= 0.0  # incoherent panel sum never reduces power
    assert "rho" in stats["regions"]["hallway_a"]


def test_simulate_no_panels_skips_seme_outputs(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--scenario", HALLWAY, "--out", str(tmp_path), "--no-panels")
    assert code == 0
    assert (tmp_path / "power_ref.csv").exists()
    assert not (tmp_path / "power_seme.csv").exists()


def test_simulate_outputs_are_byte_deterministic(capsys, tmp_path, monkeypatch):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("SEME_THREADS", "1")
    assert run(capsys, "simulate", "--scenario", HALLWAY, "--out", str(out1))[0] == 0
    monkeypatch.setenv("SEME_THREADS", "4")
    assert run(capsys, "simulate", "--scenario", HALLWAY, "--out", str(out2))[0] == 0
    for name in ("power_ref.csv", "power_seme.csv", "delta_map.csv", "stats.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_mode_and_reflection_overrides(capsys, tmp_path):
    base, alt = tmp_path / "base", tmp_path / "alt"
    assert run(capsys, "simulate", "--scenario", HALLWAY, "--out", str(base), "--no-panels")[0] == 0
    code, _, _ = run(
        capsys, "simulate", "--scenario", HALLWAY, "--out", str(alt), "--no-panels",
        "--mode", "coherent", "--max-reflections", "1",
    )
    assert code == 0
    assert (base / "power_ref.csv").read_bytes() != (alt / "power_ref.csv").read_bytes()


def test_threshold_override_changes_binary_map(capsys, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run(capsys, "simulate", "--scenario", HALLWAY, "--out", str(out1), "--no-panels")
    run(capsys, "simulate", "--scenario", HALLWAY, "--out", str(out2), "--no-panels",
        "--threshold-dbm", "-40")
    assert (out1 / "binary_ref.csv").read_bytes() != (out2 / "binary_ref.csv").read_bytes()


def test_pattern_emits_csv_and_dmax(capsys, tmp_path):
    code, out, _ = run(
        capsys, "pattern", "--scenario", HALLWAY, "--out", str(tmp_path),
        "--resolution-deg", "2.0",
    )
    assert code == 0
    assert "d_max_db=" in out
    csv = (tmp_path / "pattern_skin_a.csv").read_text().splitlines()
    assert csv[0] == "theta_deg,phi_deg,directivity_db"
    assert len(csv) > 100


def test_sweep_size_cli(capsys, tmp_path):
    code, out, _ = run(
        capsys, "sweep-size", "--scenario", HALLWAY, "--out", str(tmp_path),
        "--sizes", "0.28:10,0.55:20",
    )
    assert code == 0
    lines = (tmp_path / "size_sweep.csv").read_text().splitlines()
    assert lines[0] == "L_m,N,lambda_seme_m2,rho_pct,dp_min_db,dp_max_db,dp_avg_db,dp_dev_db,theta_th_pct"
    assert len(lines) == 3


def test_sensitivity_cli(capsys, tmp_path):
    code, out, _ = run(
        capsys, "sensitivity", "--scenario", HALLWAY, "--out", str(tmp_path),
        "--dy-range=-0.1:0.1:0.1", "--dz-range=-0.1:0.1:0.1",
    )
    assert code == 0
    assert (tmp_path / "sensitivity.csv").exists()
    assert (tmp_path / "cdf_dy_+0.000.csv").exists()
    assert (tmp_path / "cdf_dz_-0.100.csv").exists()
    assert "nominal_rho=" in out
