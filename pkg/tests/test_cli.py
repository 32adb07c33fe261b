import json

import pytest

from interlace_lab.cli import run


def _run(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_iso_example(capsys):
    code, rep = _run(capsys, "verify --identity iso --n 1 --alpha 1.0 --d 1 --kappa 1.0 --K 0 --order 2 --seed 7".split())
    assert code == 0 and rep["pass"]
    assert set(rep) == {"command", "config", "results", "pass", "versions"}
    plain = [r for r in rep["results"] if r["parameters"]["form"] == "plain"]
    u0 = 3 ** -0.5
    assert plain[0]["exact_lhs"] == pytest.approx(u0 / 2 + 1)
    assert plain[1]["exact_lhs"] == pytest.approx(0.75 * u0**2 + 3 * u0 + 1)


def test_rho_example(capsys):
    assert _run(capsys, ["verify", "--identity", "rho", "--nmax", "6"])[0] == 0


def test_usage_errors(capsys):
    assert run(["verify", "--identity", "rho", "--frobnicate"]) == 2
    assert "--frobnicate" in capsys.readouterr().err
    assert run(["teleport"]) == 2
    assert run(["soup", "--K", "0"]) == 2  # sampling without a seed
    assert run(["soup", "--K", "0,1", "--seed", "1"]) == 2  # wrong dimension


def test_numerical_error_embedded(capsys):
    code, rep = _run(capsys, "verify --identity expmoment --K 0 --seed 1 --delta 5 --samples 10".split())
    assert code == 1 and rep["results"][0]["error"] == "DivergenceError"


def test_deterministic_reports(capsys):
    argv = "soup --K 0 1 --alpha 0.5 --seed 11 --samples 200".split()
    first = _run(capsys, argv)
    assert _run(capsys, argv) == first
    assert first[1]["config"]["seed"] == 11


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nidentity = iso\nK = 0 1\norder = 1\nalpha = 0.5\n")
    code, rep = _run(capsys, ["verify", "--config", str(cfg), "--alpha", "2"])
    assert code == 0 and rep["config"]["alpha"] == 2.0 and rep["config"]["K"] == [[0], [1]]
    cfg.write_text("nonsense = 1\n")
    assert run(["verify", "--config", str(cfg)]) == 2


def test_outputs_written(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("INTERLACE_LAB_OUT", str(tmp_path))
    assert run(["green", "--radius", "2"]) == 0
    assert run(["gff", "--window", "0", "1", "--seed", "3", "--samples", "500"]) == 0
    capsys.readouterr()
    assert {"green.json", "green.csv", "gff.json", "field.csv"} <= {p.name for p in tmp_path.iterdir()}


@pytest.mark.parametrize("argv", [
    ["equilibrium", "--K", "0", "1"],
    ["moments", "--points", "0", "0", "--gaussian", "0", "1"],
    ["verify", "--identity", "multinomial", "--nmax", "5"],
    ["verify", "--identity", "rilt", "--nmax", "6"],
    ["verify", "--identity", "coeff", "--nmax", "6"],
    ["verify", "--identity", "wick", "--nmax", "10"],
    ["verify", "--identity", "shifted", "--nmax", "4"],
    ["verify", "--identity", "pairings", "--rmax", "3", "--emax", "4"],
    ["verify", "--identity", "rilt-moments", "--K", "0", "1", "--nmax", "3"],
    ["verify", "--identity", "decomposition", "--K", "0", "--seed", "2", "--samples", "20"],
    ["verify", "--identity", "backward", "--K", "0", "1", "--seed", "2", "--samples", "5000"],
    ["verify", "--identity", "iso", "--n", "2", "--K", "0", "1", "--order", "1"],
    ["asymptotics", "--eps-grid", "0.25", "0.125", "--kmax", "2"],
    ["selftest", "--only", "1", "6"],
])
def test_commands_pass(argv, capsys):
    code, rep = _run(capsys, argv)
    assert code == 0, rep
