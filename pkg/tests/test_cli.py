"""Command line interface: configs, reports, CSV traces, exit codes."""

import csv
import json
import os
import subprocess
import sys

import pytest

from hetindex import SuiteResult
from hetindex import cli as climod


def run_cli(args, tmp_path, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "hetindex.cli", *args],
        capture_output=True, text=True, cwd=tmp_path, env=env,
    )


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_report(out_dir):
    return json.loads((out_dir / "report.json").read_text())


def read_csv_rows(out_dir):
    with open(out_dir / "trace.csv", newline="") as fh:
        return list(csv.reader(fh))


ROTATING_LINE = {
    "kind": "subspace-paths",
    "V": [["cos(t)"], ["sin(t)"]],
    "W": [["0"], ["1"]],
    "interval": [0.0, 3.141592653589793],
    "samples": 51,
}

SMALL_THEOREM = {
    "kind": "linear-family",
    "n": 2,
    "k": 1,
    "S": [["0", "1"], ["1 - 2.5*lambda*sech(t)^2", "0"]],
    "tau": 8.0,
    "N": 400,
    "lam_samples": 21,
}

CUBIC = {
    "kind": "nonlinear-family",
    "g": ["z2", "(1 - 2.5*lambda*sech(t)^2)*z1 + z1^3"],
    "branch": ["0", "0"],
    "z_minus": [0.0, 0.0],
    "z_plus": [0.0, 0.0],
    "lam_range": [0.0, 1.0],
    "lam_samples": 101,
}

MASLOV = {
    "kind": "lagrangian-paths",
    "A": [["t"]],
    "B": [["-t"]],
    "interval": [-1.0, 1.0],
    "samples": 101,
}


def test_index_subspace_paths(tmp_path):
    cfg = write_config(tmp_path, ROTATING_LINE)
    res = run_cli(["index", "--config", cfg, "--out", "out"], tmp_path)
    assert res.returncode == 0, res.stderr
    report = read_report(tmp_path / "out")
    assert report["command"] == "index"
    assert report["result"]["value"] == 1
    # resolved config embeds defaults alongside the user's values
    assert report["config"]["samples"] == 51
    assert report["config"]["eps_trans"] == 1e-6
    rows = read_csv_rows(tmp_path / "out")
    assert rows[0] == ["t", "det"]
    assert len(rows) >= 52


def test_index_reports_orientability(tmp_path):
    cfg = write_config(tmp_path, {**ROTATING_LINE, "orientability": True})
    res = run_cli(["index", "--config", cfg, "--out", "out"], tmp_path)
    assert res.returncode == 0, res.stderr
    report = read_report(tmp_path / "out")
    assert report["result"]["orientability"] == 1


def test_geometric_parity_command(tmp_path):
    cfg = write_config(tmp_path, {**SMALL_THEOREM, "lam": 1.0,
                                  "lam_samples": 5, "samples": 81})
    res = run_cli(["geometric-parity", "--config", cfg, "--out", "out"],
                  tmp_path)
    assert res.returncode == 0, res.stderr
    report = read_report(tmp_path / "out")
    assert report["result"]["value"] == 1
    assert report["result"]["lam"] == 1.0
    rows = read_csv_rows(tmp_path / "out")
    assert rows[0] == ["t", "det"]


def test_verify_theorem_command(tmp_path):
    cfg = write_config(tmp_path, SMALL_THEOREM)
    res = run_cli(["verify-theorem", "--config", cfg, "--out", "out"],
                  tmp_path)
    assert res.returncode == 0, res.stderr
    report = read_report(tmp_path / "out")
    assert report["result"]["parity"] == 1
    assert report["result"]["z2_index"] == 1
    assert report["result"]["agree"] is True
    rows = read_csv_rows(tmp_path / "out")
    assert rows[0] == ["lambda", "detsign", "sigma_min"]
    assert len(rows) == 22


def test_bifurcate_command(tmp_path):
    cfg = write_config(tmp_path, CUBIC)
    res = run_cli(["bifurcate", "--config", cfg, "--out", "out"], tmp_path)
    assert res.returncode == 0, res.stderr
    report = read_report(tmp_path / "out")
    assert report["result"]["bifurcates"] is True
    candidates = report["result"]["lam_candidates"]
    assert len(candidates) == 1 and abs(candidates[0] - 0.8) < 0.01
    rows = read_csv_rows(tmp_path / "out")
    assert rows[0] == ["t", "det"]


def test_maslov_command(tmp_path):
    cfg = write_config(tmp_path, MASLOV)
    res = run_cli(["maslov", "--config", cfg, "--out", "out"], tmp_path)
    assert res.returncode == 0, res.stderr
    report = read_report(tmp_path / "out")
    assert report["result"]["maslov"] == -1
    assert report["result"]["agree_mod2"] is True
    rows = read_csv_rows(tmp_path / "out")
    assert rows[0] == ["t", "det"]


def test_schema_violation_exits_2(tmp_path):
    cfg = write_config(tmp_path, {"kind": "subspace-paths", "V": "nope"})
    res = run_cli(["index", "--config", cfg], tmp_path)
    assert res.returncode == 2


def test_malformed_expression_exits_2(tmp_path):
    cfg = write_config(tmp_path, {**ROTATING_LINE, "V": [["cos(t"], ["0"]]})
    res = run_cli(["index", "--config", cfg], tmp_path)
    assert res.returncode == 2
    assert "offset" in res.stderr


def test_missing_config_file_exits_2(tmp_path):
    res = run_cli(["index", "--config", "no-such-file.json"], tmp_path)
    assert res.returncode == 2


def test_degenerate_endpoint_exits_3(tmp_path):
    # the rotating line starts on top of W
    bad = {**ROTATING_LINE,
           "interval": [1.5707963267948966, 3.141592653589793]}
    cfg = write_config(tmp_path, bad)
    res = run_cli(["index", "--config", cfg], tmp_path)
    assert res.returncode == 3


def test_demo_list(tmp_path):
    res = run_cli(["demo", "--list"], tmp_path)
    assert res.returncode == 0
    for name in ("rotating-line", "mobius", "poschl-teller",
                 "cubic-schrodinger", "maslov-crossing"):
        assert name in res.stdout


def test_demo_unknown_exits_2_and_lists(tmp_path):
    res = run_cli(["demo", "no-such-demo"], tmp_path)
    assert res.returncode == 2
    assert "rotating-line" in res.stderr


def test_demo_runs_and_writes(tmp_path):
    res = run_cli(["demo", "rotating-line", "--out", "out"], tmp_path)
    assert res.returncode == 0, res.stderr
    report = read_report(tmp_path / "out" / "rotating-line")
    assert report["result"]["value"] == 1


def test_log_env_var(tmp_path):
    cfg = write_config(tmp_path, MASLOV)
    res = run_cli(["maslov", "--config", cfg], tmp_path,
                  env_extra={"HETINDEX_LOG": "DEBUG"})
    assert res.returncode == 0


def test_selftest_prints_and_exits_clean(monkeypatch, capsys):
    fake = [SuiteResult(name="fake-suite", total=3, passes=3, failures=())]
    monkeypatch.setattr(climod, "run_all", lambda seed=0: fake)
    code = climod.main(["selftest"])
    out = capsys.readouterr().out
    assert code == 0
    assert "fake-suite: 3/3 ok" in out


def test_selftest_failure_exits_nonzero(monkeypatch, capsys):
    fake = [SuiteResult(name="fake-suite", total=3, passes=2,
                        failures=((1, "mismatch"),))]
    monkeypatch.setattr(climod, "run_all", lambda seed=0: fake)
    code = climod.main(["selftest"])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL" in out
    assert "mismatch" in out
