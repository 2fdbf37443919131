"""Configuration loading, overrides, scenario runner, and the CLI."""

import json
import os
import subprocess
import sys

import pytest
import yaml

from lambda_beam import ConfigError, RunConfig, from_mapping, load_config
from lambda_beam.cli import main as cli_main
from lambda_beam.runner import run_scenario


def test_empty_mapping_gives_defaults():
    cfg = from_mapping({})
    assert cfg.scenario == "compare"
    assert cfg.seed == 0
    assert cfg.params.v0 == pytest.approx(0.1)
    assert cfg.probe_stations() == (0.25, 1.0)


def test_unknown_keys_are_named_in_errors():
    with pytest.raises(ConfigError, match="numerics.cflx"):
        from_mapping({"numerics": {"cflx": 0.5}})
    with pytest.raises(ConfigError, match="pulses.eps3"):
        from_mapping({"pulses": {"eps3": {}}})
    with pytest.raises(ConfigError, match="unknown key nonsense"):
        from_mapping({"nonsense": 1})


def test_invalid_values_carry_section_context():
    with pytest.raises(ConfigError, match="params.v0"):
        from_mapping({"params": {"v0": 2.0}})
    with pytest.raises(ConfigError, match="scenario"):
        from_mapping({"scenario": "warp"})
    with pytest.raises(ConfigError, match="numerics"):
        from_mapping({"numerics": {"cfl": 2.0}})


def test_yaml_round_trip_preserves_config(tmp_path):
    cfg = from_mapping({"scenario": "measure", "seed": 5,
                        "params": {"n": 1234.0},
                        "measurement": {"k_total": 77}})
    path = tmp_path / "run.yaml"
    cfg.save(path)
    again = load_config(path)
    assert again.to_dict() == cfg.to_dict()


def test_overrides_follow_dotted_paths():
    cfg = RunConfig()
    out = cfg.with_overrides(["params.n=3.6e8", "measurement.k_total=50",
                              "pulses.eps1.fwhm=2.5"])
    assert out.params.n == pytest.approx(3.6e8)
    assert out.measurement.k_total == 50
    assert out.pulses.eps1.fwhm == pytest.approx(2.5)
    with pytest.raises(ConfigError, match="unknown override path"):
        cfg.with_overrides(["params.bogus=1"])
    with pytest.raises(ConfigError, match="key=value"):
        cfg.with_overrides(["params.n"])


def test_missing_config_file_is_reported():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/run.yaml")


def test_measure_scenario_writes_expected_outputs(tmp_path):
    cfg = from_mapping({"scenario": "measure", "seed": 12,
                        "measurement": {"k_total": 200, "trials": 40}})
    manifest = run_scenario(cfg, tmp_path)
    assert manifest["status"] == "ok"
    for name in ("manifest.json", "summary.json", "config.resolved.yaml",
                 "records.csv", "intensities.csv", "intensity.svg",
                 "phase_hats.svg"):
        assert (tmp_path / name).exists(), name
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["trials"] == 40
    assert isinstance(summary["balanced"], bool)


def test_failed_run_still_writes_manifest(tmp_path):
    cfg = from_mapping({"scenario": "sweep", "sweep": {"kind": "loss"}})
    # loss sweep requires a finite decay rate; default gamma2 = 0 must fail
    with pytest.raises(ConfigError):
        run_scenario(cfg, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "error"
    assert "gamma2" in manifest["error"]


def test_compare_scenario_rejects_multiple_classes(tmp_path):
    cfg = from_mapping({"scenario": "compare",
                        "ensemble": {"nclasses": 3, "width": 0.01}})
    with pytest.raises(ConfigError, match="nclasses"):
        run_scenario(cfg, tmp_path)


def test_cli_runs_measure_and_is_reproducible(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    args = ["measure", "--seed", "31", "--set", "measurement.k_total=300",
            "--set", "measurement.trials=25"]
    assert cli_main(args + ["--out", str(out1)]) == 0
    assert cli_main(args + ["--out", str(out2)]) == 0
    rec1 = (out1 / "records.csv").read_bytes()
    rec2 = (out2 / "records.csv").read_bytes()
    assert rec1 == rec2
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["seed"] == 31
    assert manifest["scenario"] == "measure"


def test_cli_reports_config_errors_with_exit_code(tmp_path, capsys):
    rc = cli_main(["measure", "--out", str(tmp_path),
                   "--set", "params.v0=2.0"])
    assert rc == 2
    assert "params" in capsys.readouterr().err


def test_cli_uses_environment_output_dir(tmp_path, monkeypatch):
    target = tmp_path / "envout"
    monkeypatch.setenv("LAMBDA_BEAM_OUT", str(target))
    rc = cli_main(["measure", "--seed", "1",
                   "--set", "measurement.trials=10",
                   "--set", "measurement.k_total=50"])
    assert rc == 0
    assert (target / "manifest.json").exists()


def test_cli_config_file_round_trip(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump({
        "scenario": "adiabatic",
        "profile": {"npoints": 128},
        "numerics": {"horizon": 40.0},
    }))
    out = tmp_path / "run_out"
    rc = cli_main(["adiabatic", "--config", str(path), "--out", str(out)])
    assert rc == 0
    resolved = yaml.safe_load((out / "config.resolved.yaml").read_text())
    assert resolved["profile"]["npoints"] == 128
    summary = json.loads((out / "summary.json").read_text())
    assert summary["tau_L"] == pytest.approx(5.5, rel=1e-9)


def test_console_entry_point_is_installed():
    proc = subprocess.run([sys.executable, "-m", "lambda_beam.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("pde", "adiabatic", "compare", "measure", "sweep"):
        assert name in proc.stdout
