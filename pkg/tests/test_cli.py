import csv
import functools
import io

import numpy as np

import pytest

from onlinealloc.cli import EXIT_CONFIG, EXIT_INSTANCE, EXIT_SOLVER, main, read_config
from onlinealloc.model import write_instance

from _util import i0, random_instance


@pytest.fixture
def i0_file(tmp_path):
    seq, rho = i0()
    path = tmp_path / "i0.txt"
    write_instance(path, seq, rho)
    return str(path)


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_run_i0(i0_file, tmp_path, capsys):
    assert main(["run", "--instance", i0_file, "--alg", "prd", "--mu-hat", "1.2"]) == 0
    (row,) = _rows(capsys.readouterr().out)
    assert (row["reward"], row["opt"], row["regret"]) == ("5.0", "5.0", "0.0")
    out = tmp_path / "r.csv"
    assert main(["run", "--instance", i0_file, "--mu-hat", "0", "--out", str(out)]) == 0
    assert _rows(out.read_text())[0]["regret"] == "2.0"


def test_prediction_file_accepted(i0_file, tmp_path, capsys):
    pred = tmp_path / "p.pred"
    pred.write_text("1\n1.2\nnan nan nan\n")
    assert main(["run", "--instance", i0_file, "--mu-hat", str(pred)]) == 0
    assert _rows(capsys.readouterr().out)[0]["reward"] == "5.0"


def test_config_file_and_override(i0_file, tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"# experiment\ninstance = {i0_file}\nalg = prd\nmu-hat = 0\n")
    assert main(["run", "--config", str(cfg)]) == 0
    assert _rows(capsys.readouterr().out)[0]["reward"] == "3.0"
    assert main(["run", "--config", str(cfg), "--mu-hat", "1.2"]) == 0
    assert _rows(capsys.readouterr().out)[0]["reward"] == "5.0"


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("alg = prd\n\nthis line is wrong\n")
    assert main(["run", "--config", str(bad), "--generator", "two_type"]) == EXIT_CONFIG
    assert "bad.cfg:3" in capsys.readouterr().err
    unknown = tmp_path / "u.cfg"
    unknown.write_text("colour = blue\n")
    assert main(["run", "--config", str(unknown)]) == EXIT_CONFIG
    assert main(["run", "--generator", "two_type", "--mu-hat", "abc"]) == EXIT_CONFIG
    assert main(["run"]) == EXIT_CONFIG
    with pytest.raises(SystemExit):
        main(["run", "--alg", "greedy"])


def test_read_config_strips_comments(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("delta = 0.2   # block fraction\nepsilon-fn = power\n")
    assert read_config(path) == {"delta": "0.2", "epsilon_fn": "power"}


def test_instance_errors_exit_3(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 1\n1.0\n1\n2 1\n")
    assert main(["validate", "--instance", str(bad)]) == EXIT_INSTANCE
    assert main(["run", "--instance", str(bad)]) == EXIT_INSTANCE


def test_validate_prints_params(i0_file, capsys):
    assert main(["validate", "--instance", i0_file]) == 0
    row = _rows(capsys.readouterr().out)[0]
    assert row["alpha_star"] == "2.0" and row["r_bar"] == "3.0"
    assert main(["validate", "--instance", i0_file, "--r-bar", "2.5"]) == EXIT_INSTANCE


def test_solver_budget_exit_4(tmp_path, monkeypatch):
    from onlinealloc import harness, oracle
    seq, rho = random_instance(np.random.default_rng(0), T_min=12, T_max=12)
    path = tmp_path / "big.txt"
    write_instance(path, seq, rho)
    monkeypatch.setattr(harness, "solve_opt", functools.partial(oracle.solve_opt, node_budget=1))
    assert main(["run", "--instance", str(path), "--opt-method", "exact"]) == EXIT_SOLVER


def test_gen_and_rerun(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert main(["gen", "--generator", "two_type", "--T", "40", "--seed", "3", "--a", "0.5",
                 "--out", str(out)]) == 0
    assert out.exists() and (tmp_path / "g.txt.pred").exists()
    assert main(["run", "--instance", str(out), "--alg", "sa", "--mu-hat",
                 str(tmp_path / "g.txt.pred")]) == 0
    assert len(_rows(capsys.readouterr().out)) == 1
    lb = tmp_path / "lb.txt"
    assert main(["gen", "--generator", "lowerbound_two", "--T", "100", "--out", str(lb)]) == 0
    assert main(["gen", "--generator", "two_type"]) == EXIT_CONFIG


def test_regret_and_gap_study(tmp_path, capsys):
    out = tmp_path / "reg.csv"
    assert main(["regret", "--alg", "mda", "--T-list", "50,100", "--trials", "2",
                 "--out", str(out)]) == 0
    assert [r["T"] for r in _rows(out.read_text())] == ["50", "100"]
    assert "slope" in capsys.readouterr().err
    gdir = tmp_path / "gs"
    assert main(["gap-study", "--instances", "2", "--T", "200", "--levels", "0,inf",
                 "--out", str(gdir)]) == 0
    assert sorted(p.name for p in gdir.iterdir()) == [
        "gap_a0.0.csv", "gap_ainf.csv", "gap_hist_a0.0.csv", "gap_hist_ainf.csv"]


def test_run_main_with_gap_and_histogram(tmp_path, capsys):
    hist = tmp_path / "h.csv"
    assert main(["run", "--generator", "two_type", "--T", "300", "--alg", "main", "--trials",
                 "2", "--literal-pseudocode", "--histogram", str(hist)]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["switched"] for r in rows] == ["1", "1"]
    assert len(hist.read_text().splitlines()) == 13
