import csv
import json
import math
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from capdrop import __version__
from capdrop.cli import EXIT_CONFIG, EXIT_NUMERICAL, OUT_ENV, main
from capdrop.config import ConfigError, parse_config, serialize_config


def test_defaults_are_filled():
    cfg = parse_config("sigma0: 2\n")
    assert cfg.sigma0 == 2.0 and isinstance(cfg.sigma0, float)
    assert cfg.N == 64 and cfg.dn["kind"] == "taylor"
    assert cfg.simulate["scheme"] == "rk4" and cfg.branch["targets"] == [0.001, 0.002, 0.004]
    assert cfg.integrator.dt == 0.001 and cfg.dn_method.order == 4


def test_exponent_floats_parse():
    cfg = parse_config("sigma0: 1\nsimulate:\n  dt: 1e-3\n")
    assert cfg.simulate["dt"] == 1e-3


@pytest.mark.parametrize("text,field", [
    ("alpha0: 1\n", "<root>"),
    ("sigma0: -1\n", "sigma0"),
    ("sigma0: 1\nN: 31\n", "N"),
    ("sigma0: 1\nsimulate:\n  scheme: euler\n", "simulate.scheme"),
    ("sigma0: 1\nsweep:\n  - alpha0: 1\n", "sweep.0"),
])
def test_validation_names_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.diagnostics[0]["field"] == field


def test_unknown_key_reports_its_line():
    with pytest.raises(ConfigError) as info:
        parse_config("sigma0: 1\nbranch:\n  ell: 2\n  elll: 3\n")
    d = info.value.diagnostics[0]
    assert d["field"] == "branch.elll" and d["line"] == 4
    assert "line 4" in str(info.value)


def test_yaml_syntax_error_has_a_line():
    with pytest.raises(ConfigError) as info:
        parse_config("sigma0: 1\nN: [1,\n")
    assert info.value.diagnostics[0]["line"] is not None


@given(st.floats(0.01, 100), st.floats(-10, 10), st.integers(4, 64).map(lambda k: 2 * k), st.integers(0, 2**31))
def test_round_trip(sigma0, alpha0, N, seed):
    cfg = parse_config(f"sigma0: {sigma0!r}\nalpha0: {alpha0!r}\nN: {N}\nseed: {seed}\n")
    again = parse_config(serialize_config(cfg))
    assert again == cfg and again.sha256() == cfg.sha256()


def test_hash_ignores_output_location():
    a = parse_config("sigma0: 1\nout: a\n")
    assert a.sha256() == a.replace(out="b").sha256()
    assert a.sha256() != a.replace(alpha0=1.0).sha256()


def _write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def _csv_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.reader(lines))


def test_resonances_command(tmp_path):
    cfg = _write(tmp_path, "sigma0: 1.0\nresonances:\n  L: 4\n")
    assert main(["resonances", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    data = json.loads((tmp_path / "o" / "resonances.json").read_text())
    assert data["version"] == __version__ and len(data["config_sha256"]) == 64
    assert data["entries"][1]["omega_plus"] == pytest.approx(math.sqrt(1.5), abs=1e-15)


def test_stability_command(tmp_path):
    cfg = _write(tmp_path, "sigma0: 1.0\nalpha0: 2.0\nstability:\n  L_max: 8\n")
    assert main(["stability", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = dict(_csv_rows(tmp_path / "stability_summary.csv")[1:])
    assert float(rows["lambda1_zero_mode"]) == 0.0
    assert float(rows["modified_bond"]) == 0.25
    assert float(rows["constrained_min"]) > 0
    table = _csv_rows(tmp_path / "stability.csv")
    assert table[0][0] == "l" and len(table) == 1 + 9
    small = _write(tmp_path, "sigma0: 1.0\nN: 16\n", "small.yaml")
    assert main(["stability", "--config", str(small), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_simulate_zero_state(tmp_path):
    cfg = _write(tmp_path, "sigma0: 1.0\nN: 16\nsimulate:\n  initial: zero\n  dt: 0.01\n  T: 0.1\n  monitor_every: 5\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = _csv_rows(tmp_path / "trajectory.csv")
    header, body = rows[0], rows[1:]
    assert header[0] == "t" and len(body) == 3
    zeta_cols = [i for i, h in enumerate(header) if h.startswith(("zeta_", "gamma_"))]
    assert all(float(r[i]) == 0.0 for r in body for i in zeta_cols)


def test_simulate_is_bit_identical_and_seeded(tmp_path):
    text = "sigma0: 1.0\nalpha0: 0.5\nN: 16\nseed: 7\nsimulate:\n  dt: 0.01\n  T: 0.05\n"
    cfg = _write(tmp_path, text)
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "8"]) == 0
    assert a != (tmp_path / "c" / "trajectory.csv").read_bytes()


def test_output_directory_precedence(tmp_path, monkeypatch):
    cfg = _write(tmp_path, f"sigma0: 1.0\nout: {tmp_path / 'from_config'}\nresonances:\n  L: 2\n")
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "from_env"))
    assert main(["resonances", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_env" / "resonances.json").exists()
    assert main(["resonances", "--config", str(cfg), "--out", str(tmp_path / "from_flag")]) == 0
    assert (tmp_path / "from_flag" / "resonances.json").exists()
    assert not (tmp_path / "from_config").exists()


def test_config_error_exit_code_and_json(tmp_path, capsys):
    cfg = _write(tmp_path, "sigma0: -1\n")
    assert main(["resonances", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "config"
    assert err["error"]["diagnostics"][0]["field"] == "sigma0"
    assert main(["resonances", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_branch_without_resonance_is_a_config_error(tmp_path, capsys):
    cfg = _write(tmp_path, "sigma0: 0.01\nalpha0: 1.0\nN: 32\n")
    assert main(["branch", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert json.loads(capsys.readouterr().err)["error"]["type"] == "validation"


def test_branch_command(tmp_path):
    cfg = _write(tmp_path, "sigma0: 1.0\nalpha0: 0.5\nN: 32\nbranch:\n  targets: [0.001, 0.002]\n  n_modes: 3\n")
    assert main(["branch", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "branch.json").read_text())
    assert meta["complete"] is True and max(meta["cross_formulation_residuals"]) < 1e-10
    assert len(_csv_rows(tmp_path / "branch.csv")) == 3


def test_incomplete_branch_exits_numerical(tmp_path):
    cfg = _write(tmp_path, "sigma0: 1.0\nN: 32\nbranch:\n  targets: [0.001, 0.5]\n  max_iter: 8\n")
    assert main(["branch", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_NUMERICAL
    meta = json.loads((tmp_path / "branch.json").read_text())
    assert meta["complete"] is False and meta["points"]


def test_threaded_sweep_matches_serial(tmp_path):
    text = "sigma0: 1.0\nsweep:\n  - {sigma0: 1.0, alpha0: 0.0}\n  - {sigma0: 0.5, alpha0: 1.0}\n  - {sigma0: 2.0}\nresonances:\n  L: 3\n"
    cfg = _write(tmp_path, text)
    assert main(["resonances", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 0
    assert main(["resonances", "--config", str(cfg), "--out", str(tmp_path / "t"), "--threads", "3"]) == 0
    for i in range(3):
        name = f"resonances_{i:03d}.json"
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "t" / name).read_bytes()


def test_selftest_subset(tmp_path, capsys):
    cfg = _write(tmp_path, "sigma0: 1.0\nselftest:\n  criteria: [1, 9]\n")
    assert main(["selftest", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 and all(ln.startswith("PASS") for ln in lines)
    assert len(json.loads((tmp_path / "selftest.json").read_text())["results"]) == 2


def test_bad_threads(capsys):
    assert main(["resonances", "--threads", "0"]) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "capdrop", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == f"capdrop {__version__}"
