import json
import subprocess
import sys

import pytest

from infopath.cli import main

SPEC = "(!U U C) & (!C U D2) & (!D2 U D1)"
SMALL = {"grid": {"width": 4, "height": 4, "counts": {"D1": 1, "D2": 1, "U": 2}}}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(SMALL))
    return str(path)


def test_translate_spec_formula(tmp_path, capsys):
    assert main(["translate", SPEC, "--ap", "D1,D2,C,U", "--out", str(tmp_path)]) == 0
    fsa = json.loads((tmp_path / "fsa.json").read_text())
    assert len(fsa["states"]) >= 4
    assert (tmp_path / "fsa.dot").read_text().startswith("digraph")
    assert "states: 5" in capsys.readouterr().out


def test_translate_true(tmp_path):
    assert main(["translate", "true", "--ap", "a", "--out", str(tmp_path)]) == 0
    fsa = json.loads((tmp_path / "fsa.json").read_text())
    assert fsa["states"] == ["true"] and fsa["accepting"] == [0]


def test_translate_bad_syntax(tmp_path, capsys):
    assert main(["translate", "a & (b", "--ap", "a,b", "--out", str(tmp_path)]) == 2
    assert "position" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as e:
        main(["plan", "--mode", "bogus"])
    assert e.value.code == 2


def test_bad_config_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"mu0": 3}))
    assert main(["plan", "--config", str(path), "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("mode,width", [("rhc", 4), ("exhaustive", 3)])
def test_plan_feasible(tmp_path, capsys, mode, width):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": {"width": width, "height": width, "counts": {"D1": 1, "D2": 1, "U": 2}}}))
    out = tmp_path / mode
    assert main(["plan", "--config", str(cfg), "--mode", mode, "--seed", "2", "--out", str(out)]) == 0
    assert "satisfied=true" in capsys.readouterr().out
    summary = json.loads((out / "summary.json").read_text())
    assert summary["satisfied"] is True
    assert (out / "path.png").exists() and (out / "product.dot").exists()
    trace = json.loads((out / "trace.json").read_text())
    assert trace[0]["time"] == 0 and trace[-1]["W"] == 0


def test_plan_infeasible(tmp_path, capsys):
    ts = {"names": ["a", "b"], "ap": ["D1", "D2", "C", "U"], "labels": [0, 4], "q0": 0,
          "transitions": [[0, "go", 1, 1.0]], "meas": [[0, 1, 1.0]]}
    path = tmp_path / "inf.json"
    path.write_text(json.dumps({"transition_system": ts}))
    assert main(["plan", "--config", str(path), "--out", str(tmp_path / "o")]) == 3
    assert "specification infeasible" in capsys.readouterr().err


def test_plan_same_seed_identical(tmp_path, small_config):
    for name in ("a", "b"):
        assert main(["plan", "--config", small_config, "--seed", "5", "--no-figures", "--no-timing",
                     "--out", str(tmp_path / name)]) == 0
    for f in ("trace.json", "summary.json", "environment.json", "product.dot"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_montecarlo_outputs(tmp_path, small_config, capsys):
    out = tmp_path / "mc"
    assert main(["montecarlo", "--config", small_config, "--trials", "3", "--seed", "1", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "mean=" in printed and "median=" in printed and "variance=" in printed
    for f in ("results.csv", "histogram.csv", "summary.json", "traces.json", "config.json", "histogram.png"):
        assert (out / f).exists()
    assert json.loads((out / "summary.json").read_text())["satisfaction_rate"] == 1.0


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "infopath", "translate", "F a", "--ap", "a", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "states: 2" in r.stdout
