import json
import os
import subprocess
import sys

import pytest

from grushin import cli
from grushin.oscillator import CapacityError
from grushin.report import Report, emit_plot_data


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "grushin", *args], capture_output=True,
                          text=True, cwd=cwd)


def test_eigen_suite_json(tmp_path):
    out = tmp_path / "eigen.json"
    res = run_cli("--suite", "eigen", "--cache-dir", str(tmp_path / "cache"), "--out", str(out))
    assert res.returncode == 0, res.stderr
    rep = json.loads(out.read_text())
    gaps = [r for r in rep["records"] if r["family"] == "gap"]
    assert len(gaps) == 200 and all(r["pass_flag"] for r in gaps)
    assert rep["provenance"]["seed"] == 0
    assert "table_cache_key" in rep["provenance"]


def test_determinism_modulo_timing(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert cli.main(["--suite", "eigen", "--set", "count=40", "--out", str(p)]) == 0
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    da.pop("timing"), db.pop("timing")
    assert da == db


def test_csv_format(tmp_path):
    out = tmp_path / "e.csv"
    assert cli.main(["--suite", "eigen", "--set", "count=20", "--format", "csv",
                     "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# suite=eigen")
    assert lines[1].startswith("name,value,error_bound")


@pytest.mark.parametrize("args", [
    ["--suite", "nonsense"],
    ["--suite", "eigen", "--set", "count=2"],
    ["--suite", "eigen", "--tol.mass", "-1"],
    ["--suite", "eigen", "--set", "colour=blue"],
    ["--suite", "eigen", "--bogus"],
    ["--suite", "riesz", "--d1", "2"],
])
def test_usage_errors_write_nothing(tmp_path, args):
    out = tmp_path / "never.json"
    assert cli.main(args + ["--out", str(out)]) == 2
    assert not out.exists()
    assert os.listdir(tmp_path) == []


def test_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment\nsuite = lemma34\neps = 0.5\ncount = 30\ntol.mass = 0.5\n")
    cfg = cli.build_config(["--config", str(conf), "--set", "eps=0.1", "--tol.mass", "0.25"])
    assert cfg["suite"] == "lemma34"
    assert cfg["count"] == 30
    assert cfg["eps"] == 0.1
    assert cfg["tol.mass"] == 0.25
    assert cfg["tol.slope"] == cli.TOLERANCES["slope"]


def test_malformed_config_file(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("suite eigen\n")
    out = tmp_path / "x.json"
    assert cli.main(["--config", str(conf), "--out", str(out)]) == 2
    assert not out.exists()


def test_capacity_exit_code(tmp_path, monkeypatch):
    def boom(cfg):
        raise CapacityError("lattice needs reach > 1e9")
    monkeypatch.setitem(cli.SUITE_FUNCS, "eigen", boom)
    out = tmp_path / "x.json"
    assert cli.main(["--suite", "eigen", "--out", str(out)]) == 3
    assert not out.exists()


def test_failure_exit_code(tmp_path, capsys):
    out = tmp_path / "e.json"
    assert cli.main(["--suite", "eigen", "--set", "count=20", "--tol.eigen_oracle", "1e-14",
                     "--out", str(out)]) == 1
    assert "FAILED oracle_agreement" in capsys.readouterr().err
    assert out.exists()


def test_plot_data(tmp_path):
    rep = Report("riesz")
    rep.add("l1[R=1]", 2.0, error_bound=0.5, family="riesz_l1", R=1.0)
    rep.add("l1[R=2]", 2.1, error_bound=0.4, family="riesz_l1", R=2.0)
    rep.provenance["families"] = ["riesz_l1", "empty"]
    path = tmp_path / "p.csv"
    assert emit_plot_data(rep, "riesz_l1", path) == 2
    rows = path.read_text().splitlines()
    assert rows[2] == "R,value,error_bound"
    assert rows[3].startswith("1.0,2.0,0.5")
    assert emit_plot_data(rep, "empty", tmp_path / "e.csv") == 0
    with pytest.raises(KeyError):
        emit_plot_data(rep, "missing", tmp_path / "m.csv")


def test_plot_flag(tmp_path):
    path = tmp_path / "gaps.csv"
    assert cli.main(["--suite", "eigen", "--set", "count=20", "--out", str(tmp_path / "r.json"),
                     "--plot", f"oracle_dev={path}"]) == 0
    assert len(path.read_text().splitlines()) == 3 + 21  # one extra mode for the last gap
    assert cli.main(["--suite", "eigen", "--set", "count=20", "--out", str(tmp_path / "r.json"),
                     "--plot", f"nothing={tmp_path / 'n.csv'}"]) == 2
