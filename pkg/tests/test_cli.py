"""Command-line interface: config parsing, exit codes, output schema,
manifest integrity, and determinism."""

import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from cavityspin.cli import CONFIG_KEYS, ConfigError, parse_config
from cavityspin.observables import ObservableRecord

SCHEMA_LINE = "# cavityspin-csv v1"


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "cavityspin.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


def write_config(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_config_basic(tmp_path):
    p = write_config(tmp_path, """
# comment line
N = 4
alpha = 1.8      # trailing comment
use_cas = false
""")
    values = parse_config(p, "prepare")
    assert values == {"N": 4, "alpha": 1.8, "use_cas": False}


def test_parse_config_unknown_key(tmp_path):
    p = write_config(tmp_path, "gamma_photon = 0.1\n")
    with pytest.raises(ConfigError, match="gamma_photon"):
        parse_config(p, "prepare")


def test_parse_config_bad_value(tmp_path):
    p = write_config(tmp_path, "N = three\n")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config(p, "prepare")


def test_parse_config_missing_file():
    with pytest.raises(ConfigError):
        parse_config("/nonexistent/path.cfg", "prepare")


def test_cli_unknown_key_exit_code(tmp_path):
    cfg = write_config(tmp_path, "gamma_photon = 0.1\n")
    res = run_cli("prepare", "--config", cfg, "--out", str(tmp_path))
    assert res.returncode == 2
    assert "gamma_photon" in res.stderr


def test_cli_prepare_outputs_and_manifest(tmp_path):
    cfg = write_config(tmp_path, "N = 2\nalpha = 1.5\ngt_prep = 0.2\n"
                                 "prep_samples = 4\n")
    out = tmp_path / "out"
    res = run_cli("prepare", "--config", cfg, "--out", str(out))
    assert res.returncode == 0, res.stderr
    csv = out / "prepare_records.csv"
    lines = csv.read_text().splitlines()
    assert lines[0] == f"{SCHEMA_LINE} records"
    assert lines[1].split(",") == list(ObservableRecord.FIELDS)
    assert len(lines) == 2 + 5
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "prepare"
    assert manifest["config"]["N"] == 2
    entry = next(e for e in manifest["outputs"]
                 if e["file"].endswith("prepare_records.csv"))
    assert entry["sha256"] == hashlib.sha256(csv.read_bytes()).hexdigest()


def test_cli_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, "N = 2\nalpha = 1.2\ngt_prep = 0.3\n"
                                 "prep_samples = 3\n")
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        res = run_cli("prepare", "--config", cfg, "--out", str(out))
        assert res.returncode == 0, res.stderr
        outs.append((out / "prepare_records.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_truncation_exit_code(tmp_path):
    cfg = write_config(tmp_path, "N = 2\nalpha = 5.0\nn_max_override = 6\n")
    res = run_cli("prepare", "--config", cfg, "--out", str(tmp_path / "o"))
    assert res.returncode == 4


def test_cli_scenario_error_exit_code(tmp_path):
    # radiating an un-tilted inverted state: <Sz> >= 0 is rejected
    cfg = write_config(tmp_path, "N = 4\nuse_cas = true\ntilt = 3.1\n"
                                 "rad_samples = 4\nrad_window = 0.1\n")
    res = run_cli("radiate", "--config", cfg, "--out", str(tmp_path / "o"))
    assert res.returncode == 3


def test_cli_json_format(tmp_path):
    cfg = write_config(tmp_path, "N = 2\nalpha = 1.0\ngt_prep = 0.1\n"
                                 "prep_samples = 2\n")
    out = tmp_path / "out"
    res = run_cli("prepare", "--config", cfg, "--out", str(out),
                  "--format", "json")
    assert res.returncode == 0, res.stderr
    payload = json.loads((out / "prepare_records.json").read_text())
    assert payload["schema"] == f"{SCHEMA_LINE.lstrip('# ')} records"
    assert payload["columns"] == list(ObservableRecord.FIELDS)
    assert len(payload["rows"]) == 3


def test_cli_validate(tmp_path):
    cfg = write_config(tmp_path, "N = 6\nalpha = 2.0\ngamma_f = 0.01\n")
    res = run_cli("validate", "--config", cfg,
                  "--validate-command", "tailor")
    assert res.returncode == 0, res.stderr
    assert "basis:" in res.stdout
    assert "runtime class:" in res.stdout
    assert res.stdout.strip().endswith("ok")


def test_cli_two_atom_command(tmp_path):
    cfg = write_config(tmp_path, "alpha = 4.0\ngt_window = 0.3\n"
                                 "gt_samples = 5\n")
    out = tmp_path / "out"
    res = run_cli("two-atom", "--config", cfg, "--out", str(out))
    assert res.returncode == 0, res.stderr
    lines = (out / "two_atom.csv").read_text().splitlines()
    assert lines[1] == "gt,factor,factor_approx,closed_form_error"
    errs = [float(l.split(",")[3]) for l in lines[2:]]
    assert max(errs) < 1e-10


def test_cli_phase_min_command(tmp_path):
    cfg = write_config(tmp_path, "nbars = 1.0, 5.0\n")
    out = tmp_path / "out"
    res = run_cli("phase-min", "--config", cfg, "--out", str(out))
    assert res.returncode == 0, res.stderr
    lines = (out / "phase_min.csv").read_text().splitlines()
    assert len(lines) == 2 + 2
    ratios = [float(l.split(",")[-1]) for l in lines[2:]]
    assert all(r < 1.0 for r in ratios)


def test_cli_pendulum_command(tmp_path):
    cfg = write_config(tmp_path, "N = 50\nalpha = 5.0\ngt_samples = 10\n")
    out = tmp_path / "out"
    res = run_cli("pendulum", "--config", cfg, "--out", str(out))
    assert res.returncode == 0, res.stderr
    lines = (out / "pendulum.csv").read_text().splitlines()
    assert lines[0] == f"{SCHEMA_LINE} pendulum"
    first = [float(x) for x in lines[2].split(",")]
    assert np.isclose(first[2], 25.0, atol=1e-9)  # sz(0) = N/2


def test_cli_qfunc_command(tmp_path):
    cfg = write_config(tmp_path, "N = 4\nuse_cas = true\ntilt = 0.3\n"
                                 "target = atoms\ngrid_points = 31\n")
    out = tmp_path / "out"
    res = run_cli("qfunc", "--config", cfg, "--out", str(out))
    assert res.returncode == 0, res.stderr
    lines = (out / "spin_qgrid.csv").read_text().splitlines()
    assert lines[0] == f"{SCHEMA_LINE} qgrid-spin"
    assert len(lines) == 2 + 31 * 61


def test_config_keys_cover_all_commands():
    from cavityspin.cli import COMMANDS
    assert set(CONFIG_KEYS) == set(COMMANDS)
