import csv
import json

import numpy as np
import pytest

from sqglab import cli
from sqglab.config import ConfigError, RunConfig, SCHEMA_VERSION, load_config, parse_config_text
from sqglab.io import fmt, read_csv, write_csv
from sqglab.spectral import TorusGrid, load_snapshot, random_field
from sqglab.timestepping import SolverBlowup

FAST = ["--n", "16", "--dt", "0.01", "--t-span", "0.05"]


def test_config_parsing_and_validation(tmp_path):
    vals = parse_config_text("grid.n = 32  # small\n\nsqg.gamma=1.4\n")
    assert vals == {"grid.n": "32", "sqg.gamma": "1.4"}
    cfg = RunConfig(vals)
    assert cfg["grid.n"] == 32 and cfg["sqg.gamma"] == 1.4
    with pytest.raises(ConfigError) as e:
        parse_config_text("grid.size = 3")
    assert e.value.key == "grid.size"
    with pytest.raises(ConfigError):
        parse_config_text("just words")
    with pytest.raises(ConfigError):
        RunConfig({"grid.n": "3.5"})
    with pytest.raises(ConfigError):
        RunConfig({"time.scheme": "rk45"})
    with pytest.raises(ConfigError):
        RunConfig({"schema_version": SCHEMA_VERSION + 1})
    p = tmp_path / "c.txt"
    p.write_text(RunConfig({"sqg.gamma": 1.3}).echo())
    assert load_config(p).as_dict() == RunConfig({"sqg.gamma": 1.3}).as_dict()


def test_io_formatting(tmp_path):
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3"
    with pytest.raises(ValueError):
        fmt(float("nan"))
    p = tmp_path / "x.csv"
    write_csv(p, ("a", "b"), [[1, 0.5], [2, 0.25]])
    header, rows = read_csv(p)
    assert header == ["a", "b"] and np.array_equal(rows, [[1, 0.5], [2, 0.25]])
    assert not (tmp_path / "x.csv.partial").exists()


def test_simulate_deterministic(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["simulate", *FAST, "--seed", "3", "--out-dir", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "norms.csv").read_bytes()
    assert a == (tmp_path / "b" / "norms.csv").read_bytes()
    with open(tmp_path / "a" / "norms.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "l2proxy", "hsigma", "lp", "linf", "energy_residual"]
    assert len(rows) == 7
    snap = load_snapshot(tmp_path / "a" / "snapshots" / "theta_000005.sqgf")
    assert snap.grid.n == 16
    assert cli.main(["simulate", *FAST, "--seed", "4", "--out-dir", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "norms.csv").read_bytes() != a


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["simulate", *FAST, "--gamma", "2.5", "--out-dir", str(tmp_path)]) == 2
    assert "(H1)" in capsys.readouterr().err
    assert cli.main(["simulate", "--set", "grid.size=4", "--out-dir", str(tmp_path)]) == 2
    assert "grid.size" in capsys.readouterr().err
    cfgf = tmp_path / "future.txt"
    cfgf.write_text(f"schema_version = {SCHEMA_VERSION + 1}\n")
    assert cli.main(["simulate", "--config", str(cfgf), "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["diagnose", "--out-dir", str(tmp_path)]) == 2


def test_blowup_exit_code(tmp_path, monkeypatch):
    good = random_field(TorusGrid(16), np.random.default_rng(0))

    def boom(cfg):
        raise SolverBlowup("non-finite coefficient at mode k=(1, 2)", t=0.1, mode=(1, 2), last_good=good)

    monkeypatch.setitem(cli.COMMANDS, "simulate", boom)
    assert cli.main(["simulate", "--out-dir", str(tmp_path)]) == 3
    assert np.array_equal(load_snapshot(tmp_path / "last_good.sqgf").coeffs, good.coeffs)


@pytest.mark.filterwarnings("ignore:attractor spin-up")
def test_nudge_then_diagnose(tmp_path):
    run = tmp_path / "run"
    args = ["nudge", "--n", "32", "--spinup", "2", "--window", "1.0", "--m", "4", "--out-dir", str(run)]
    assert cli.main(args) == 0
    rep = json.loads((run / "report.json").read_text())
    assert rep["sync"]["synchronized"] and rep["hypotheses"]["admissible"]
    assert cli.main(["diagnose", "--run", str(run), "--n-max", "6", "--pairs", "4",
                     "--out-dir", str(tmp_path / "diag")]) == 0
    d = json.loads((tmp_path / "diag" / "diagnostics.json").read_text())
    assert d["degiorgi"]["non_increasing"]
    assert d["levelset"]["passed"]
    assert d["lemmas"]["iteration"]["holds"]


def test_lp_verify_and_steady(tmp_path):
    assert cli.main(["lp-verify", "--n", "32", "--ensemble", "5", "--out-dir", str(tmp_path / "lp")]) == 0
    assert json.loads((tmp_path / "lp" / "lp_report.json").read_text())["passed"]
    assert cli.main(["steady", "--n", "16", "--tol", "1e-9", "--out-dir", str(tmp_path / "st")]) == 0
    assert json.loads((tmp_path / "st" / "steady.json").read_text())["converged"]


def test_sweep_records_failures(tmp_path):
    assert cli.main(["sweep", "--command", "simulate", *FAST, "--axes", "sqg.gamma=1.5,2.5;seed=1,2",
                     "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "sweep.csv") as fh:
        header, *rows = list(csv.reader(fh))
    assert header[:4] == ["point", "sqg.gamma", "seed", "status"]
    assert len(rows) == 4
    status = {(r[1], r[2]): r[3] for r in rows}
    assert status[("1.5", "1")] == "ok"
    assert status[("2.5", "2")].startswith("failed: HypothesisError")
    assert cli.main(["sweep", "--axes", "seed=1,2,3", "--cap", "2", "--out-dir", str(tmp_path / "x")]) == 2
