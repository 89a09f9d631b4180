"""
End-to-end tests of the command-line surface: bundled scenarios in,
artifacts and summary.json out, exit codes on failure.
"""
import json

import pytest
from sqlalchemy.orm import sessionmaker

import qict.dependencies
from qict.catalog import list_scenarios
from qict.cli import main


@pytest.fixture(autouse=True)
def no_ledger(monkeypatch):
    """Commands run without a ledger unless a test installs one"""
    monkeypatch.setattr(qict.dependencies, "engine", None)


def _run(tmp_path, scenario, *extra, name="out"):
    out_dir = tmp_path / name
    code = main(["run", scenario, "--out-dir", str(out_dir), *extra])
    return code, out_dir


def _summary(out_dir):
    return json.loads((out_dir / "summary.json").read_text())


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("mirror-fd", "sample1", "sample2", "fig5a", "fig5b", "image-edge", "image-bars"):
        assert name in out
    assert len(out.strip().splitlines()) == len(list_scenarios())


@pytest.mark.parametrize("name", list_scenarios())
def test_bundled_scenarios_validate(name, capsys):
    assert main(["validate", name]) == 0
    assert "valid" in capsys.readouterr().out


def test_mirror_reconstruction(tmp_path, capsys):
    code, out_dir = _run(tmp_path, "mirror-fd")
    assert code == 0
    assert "wrote" in capsys.readouterr().out
    for artifact in ("fringe_fd.csv", "depth_profile.csv", "peaks.csv", "summary.json"):
        assert (out_dir / artifact).is_file()
    summary = _summary(out_dir)
    assert summary["scenario"] == "mirror-fd"
    assert summary["seed"] == 1
    peaks = summary["metrics"]["peaks"]
    assert len(peaks) == 1
    assert abs(peaks[0]["position_m"] - 1e-3) <= summary["metrics"]["depth_bin_m"]


def test_fringe_csv_layout(tmp_path):
    _, out_dir = _run(tmp_path, "mirror-fd")
    lines = (out_dir / "fringe_fd.csv").read_text().splitlines()
    assert lines[:3] == ["axis_unit,kind", "relative_wavelength_m,FD", "axis,expected,sampled"]
    assert len(lines) == 3 + 256


def test_reruns_are_byte_identical(tmp_path):
    """Same seed, any thread count: identical artifacts"""
    _, first = _run(tmp_path, "mirror-fd", "--threads", "1", name="a")
    _, second = _run(tmp_path, "mirror-fd", "--threads", "4", name="b")
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_seed_changes_the_draws(tmp_path):
    _, first = _run(tmp_path, "mirror-fd", name="a")
    _, second = _run(tmp_path, "mirror-fd", "--seed", "2", name="b")
    assert (first / "fringe_fd.csv").read_bytes() != (second / "fringe_fd.csv").read_bytes()
    assert _summary(second)["seed"] == 2


def test_sample1_thicknesses(tmp_path):
    code, out_dir = _run(tmp_path, "sample1")
    assert code == 0
    thicknesses = _summary(out_dir)["metrics"]["thicknesses"]
    assert [t["layer"] for t in thicknesses] == ["sapphire", "air gap"]
    for row in thicknesses:
        assert abs(row["relative_error"]) < 0.01
    assert (out_dir / "thicknesses.csv").is_file()


def test_sample2_thicknesses_under_noise(tmp_path):
    code, out_dir = _run(tmp_path, "sample2")
    assert code == 0
    thicknesses = _summary(out_dir)["metrics"]["thicknesses"]
    assert [t["layer"] for t in thicknesses] == ["silicon", "air gap", "sapphire"]
    for row in thicknesses:
        assert abs(row["relative_error"]) < 0.08


def test_unmatched_interface_is_a_domain_error(tmp_path, capsys):
    """Only the strongest peak survives, so the other interfaces go unmatched"""
    code, out_dir = _run(tmp_path, "sample1", "--override", "reconstruction.min_prominence=0.99")
    assert code == 4
    assert "interface" in capsys.readouterr().err
    assert not (out_dir / "thicknesses.csv").exists()


def test_visibility_sweep(tmp_path):
    code, out_dir = _run(tmp_path, "fig5a")
    assert code == 0
    summary = _summary(out_dir)
    metrics = summary["metrics"]
    assert metrics["fit_r_squared"] > 0.999
    assert abs(metrics["fit_slope"] - 0.6148) < 0.01
    assert abs(summary["visibility"] - 0.615) < 0.001


def test_override_switches_the_arm(tmp_path):
    code, out_dir = _run(tmp_path, "fig5a", "--override", "visibility_sweep.arm=signal",
                         "--override", "visibility_sweep.idler_double_pass=false")
    assert code == 0
    assert _summary(out_dir)["metrics"]["arm"] == "signal"


def test_td_scan_finds_the_mirror_burst(tmp_path):
    code, out_dir = _run(tmp_path, "mirror-td")
    assert code == 0
    metrics = _summary(out_dir)["metrics"]
    assert metrics["expected_burst_positions_m"] == pytest.approx([0.5e-3])
    assert len(metrics["bursts"]) == 1
    assert abs(metrics["bursts"][0]["position_m"] - 0.5e-3) < 2e-6
    assert (out_dir / "fringe_td.csv").is_file()


def test_resolution_plateau_matches_theory(tmp_path):
    code, out_dir = _run(tmp_path, "resolution")
    assert code == 0
    metrics = _summary(out_dir)["metrics"]
    assert abs(metrics["plateau_fwhm_m"] / metrics["axial_resolution_theory_m"] - 1) < 0.03
    assert len(metrics["points"]) == 19


def test_snr_curve_slope(tmp_path):
    code, out_dir = _run(tmp_path, "snr")
    assert code == 0
    assert abs(_summary(out_dir)["metrics"]["snr_slope"] - 1.0) < 0.2


def test_edge_image_line_spread(tmp_path):
    """Confocal coupling narrows the 17 um beam to about 12 um"""
    code, out_dir = _run(tmp_path, "image-edge", "--override", "imaging.ny=5")
    assert code == 0
    metrics = _summary(out_dir)["metrics"]
    assert 11.4e-6 <= metrics["lsf_fwhm_m"] <= 12.6e-6
    assert metrics["pixel_max"] > 0
    for artifact in ("image.csv", "image.pgm", "edge_line.csv"):
        assert (out_dir / artifact).is_file()


def test_unknown_scenario_is_a_parse_error(tmp_path, capsys):
    code, _ = _run(tmp_path, "no-such-scenario")
    assert code == 2
    assert "no-such-scenario" in capsys.readouterr().err


def test_malformed_override_is_a_parse_error(tmp_path):
    assert _run(tmp_path, "mirror-fd", "--override", "seed")[0] == 2
    assert _run(tmp_path, "mirror-fd", "--override", "sample..max_order=1")[0] == 2


def test_invalid_json_is_a_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"name": "broken",')
    assert main(["validate", str(path)]) == 2


def test_bad_thread_count(tmp_path):
    assert _run(tmp_path, "mirror-fd", "--threads", "0")[0] == 2


def test_schema_violation_names_the_field(tmp_path, capsys):
    code, _ = _run(tmp_path, "mirror-fd", "--override", "detector.efficiency=1.5")
    assert code == 3
    assert "detector.efficiency" in capsys.readouterr().err


def test_unknown_key_is_a_validation_error(capsys):
    assert main(["validate", "mirror-fd", "--override", "detector.gain=2"]) == 3
    assert "detector.gain" in capsys.readouterr().err


def test_physics_violation_names_the_section(capsys):
    """A spectrum wider than its grid fails when the spectrum is built"""
    assert main(["validate", "mirror-fd", "--override", "spectrum.fwhm=1e-08"]) == 3
    assert "spectrum" in capsys.readouterr().err


def test_missing_section_for_kind(tmp_path):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps({"name": "sweep", "kind": "visibility-sweep"}))
    assert main(["validate", str(path)]) == 3


def test_runtime_domain_error(tmp_path):
    code, _ = _run(tmp_path, "image-edge", "--override", "imaging.depth_select=0.01")
    assert code == 4


def test_enumeration_limit_is_a_domain_error(tmp_path):
    assert _run(tmp_path, "sample1", "--override", "sample.path_cap=2")[0] == 4


def test_history_without_ledger(capsys):
    assert main(["history"]) == 0
    assert "ledger disabled" in capsys.readouterr().out


def test_runs_are_recorded_in_the_ledger(tmp_path, monkeypatch, ledger_engine, capsys):
    monkeypatch.setattr(qict.dependencies, "engine", ledger_engine)
    monkeypatch.setattr(qict.dependencies, "SessionLocal", sessionmaker(bind=ledger_engine))
    assert _run(tmp_path, "fig5b")[0] == 0
    assert _run(tmp_path, "sample1", "--override", "sample.path_cap=2", name="failed")[0] == 4
    capsys.readouterr()

    assert main(["history", "--limit", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    assert "failed" in lines[0] and "sample1" in lines[0]
    assert "succeeded" in lines[1] and "fig5b" in lines[1]
