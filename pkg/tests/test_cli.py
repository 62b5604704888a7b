import json
import subprocess
import sys

import numpy as np
import pytest

from slz import cli
from slz.cli import main, parse_grid
from slz.problems import ConfigError


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("20:100:log10"), np.geomspace(20, 100, 10))
    np.testing.assert_allclose(parse_grid("0:1:lin5"), np.linspace(0, 1, 5))
    np.testing.assert_allclose(parse_grid("6,8,10"), [6, 8, 10])
    for bad in ("1:2", "1:2:cube3", "a,b", "1:2:lin0", ""):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_eig_harmonic(tmp_path):
    assert run(tmp_path, "eig", "--problem", "harmonic_full", "--truncate", "-6", "6", "--n", "8") == 0
    rows = (tmp_path / "eigenvalues.csv").read_text().splitlines()
    lam = np.array([float(r.split(",")[1]) for r in rows[1:]])
    np.testing.assert_allclose(lam, 2 * np.arange(8) + 1, atol=1e-5)


def test_unknown_problem(tmp_path, capsys):
    assert run(tmp_path, "eig", "--problem", "nosuch") == 2
    assert "unknown catalog name" in capsys.readouterr().err


@pytest.mark.parametrize("args", [["eig", "--bogus"], ["charfn", "--problem", "free", "--x", "1:2"],
                                  ["eig", "--problem", "laguerre", "--gamma", "-1"]])
def test_usage_errors(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_numerical_failure_writes_diagnostics(tmp_path, monkeypatch):
    def boom(prob, ns, out):
        raise ArithmeticError("no convergence")

    monkeypatch.setitem(cli._HANDLERS, "eig", boom)
    assert run(tmp_path, "eig", "--problem", "free") == 3
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diag["error"] == "ArithmeticError" and diag["command"] == "eig"


def test_zeta_partial(tmp_path):
    assert run(tmp_path, "zeta-partial", "--problem", "free", "--x", "3.14159", "--ell", "2") == 0
    rows = (tmp_path / "zeta_partial.csv").read_text().splitlines()
    assert rows[0] == "x,l,value,method,shift"
    assert abs(float(rows[2].split(",")[2]) - np.pi**4 / 90) < 1e-4


def test_charfn(tmp_path):
    assert run(tmp_path, "charfn", "--problem", "harmonic_half", "--x", "6,8,10", "--z", "2,3") == 0
    assert (tmp_path / "charfn.json").exists()
    rows = (tmp_path / "charfn.csv").read_text().splitlines()
    assert abs(float(rows[2].split(",")[3])) < 1e-8


def test_convrate(tmp_path):
    assert run(tmp_path, "convrate", "--problem", "laguerre", "--gamma", "1", "--j", "2", "--x", "20:30:lin2") == 0
    for name in ("convrate.csv", "convrate.gp", "convrate.json"):
        assert (tmp_path / name).exists()


def test_run_config(tmp_path):
    cfg = {"command": "eig", "problem": "free", "options": {"n": 3}, "output_dir": str(tmp_path / "o")}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "o" / "eigenvalues.csv").exists()
    path.write_text("{}")
    assert main(["run", str(path)]) == 2


def test_determinism(tmp_path):
    for d in ("a", "b"):
        assert run(tmp_path / d, "eig", "--problem", "airy", "--truncate", "0", "30", "--n", "5") == 0
    assert (tmp_path / "a" / "eigenvalues.csv").read_bytes() == (tmp_path / "b" / "eigenvalues.csv").read_bytes()


def test_validate_subset(tmp_path):
    assert run(tmp_path, "validate", "--checks", "1") == 0
    assert json.loads((tmp_path / "validate.json").read_text())["1"]["passed"] is True


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "slz", "eig", "--problem", "free", "--n", "2",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
