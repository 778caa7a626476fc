"""The ``szego`` command line."""
import json
import subprocess
import sys

import pytest

from szegolab.cli import main


def _run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_success_prints_payload(tmp_path, capsys):
    code, out, err = _run(["shell-spectrum", "--n", "3", "--out", str(tmp_path)], capsys)
    assert code == 0
    body = json.loads(out)
    assert body["meta"]["seed"] == 0
    assert json.loads(err)["cached"] is False
    code, out2, err = _run(["shell-spectrum", "--n", "3", "--out", str(tmp_path)], capsys)
    assert out2 == out and json.loads(err)["cached"] is True


@pytest.mark.parametrize("argv", [
    ["moments", "--n", "0"],
    ["moments", "--n", "x"],
    ["shell-spectrum", "--field", "-2"],
    ["bogus"],
    ["shell-spectrum", "--unknown-flag", "1"],
])
def test_invalid_spec_exits_1(tmp_path, capsys, argv):
    code, _, err = _run(argv + ["--out", str(tmp_path)], capsys)
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "spec"


def test_numerical_failure_exits_2(tmp_path, capsys):
    code, out, err = _run(["resonances", "--n", "2", "--field-knob", "0.05", "--nmax", "10",
                           "--lmax", "3", "--out", str(tmp_path)], capsys)
    assert code == 2 and out == ""
    diag = json.loads(err.strip().splitlines()[-1])
    assert diag["error"] == "numerical" and diag["type"] == "ClusterError"
    assert diag["spec"]["params"]["field_knob"] == 0.05


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# shell run\nn = 3\nfield = 2.0\nseed = 5\n")
    code, out, _ = _run(["shell-spectrum", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == 0
    body = json.loads(out)
    assert body["meta"]["seed"] == 5
    code, out, _ = _run(["shell-spectrum", "--config", str(cfg), "--n", "4", "--out",
                         str(tmp_path)], capsys)
    spec = json.loads((next(tmp_path.glob("shell-spectrum-*")) / "spec.json").read_text())
    assert spec["params"]["F"] == 2.0
    specs = [json.loads(p.read_text())["params"]["N"] for p in tmp_path.glob("*/spec.json")]
    assert sorted(specs) == [3, 4]


def test_compare_alias_and_report(tmp_path, capsys):
    code, _, _ = _run(["compare", "--n", "4,8,12", "--samples", "2000", "--out", str(tmp_path)],
                      capsys)
    assert code == 0
    code, out, _ = _run(["report", "--out", str(tmp_path)], capsys)
    assert code == 0
    recs = json.loads(out)["records"]
    assert [r["kind"] for r in recs] == ["szego-compare"]


def test_console_script_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "szegolab.cli", "shell-spectrum", "--n", "2",
                          "--out", str(tmp_path)], capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and json.loads(res.stdout)["meta"]["seed"] == 0
