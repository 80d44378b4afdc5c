import csv
import subprocess
import sys

import numpy as np
import pytest

from fracwin.cli import main
from fracwin.output import read_trajectory_csv, write_trajectory_csv
from fracwin.scenario import BUILTIN, load_config, resolve, run, run_sweep
from fracwin.errors import ConfigError
from fracwin.solver import solve_short_memory
from oracles import SHORT_T_095_5, THRESHOLD

SECTIONS = ["[inputs]", "[thresholds]", "[margins]", "[verdict]"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------- fixtures

@pytest.mark.parametrize("name,x0", [("example1", (3.0,)), ("example2", (7.0, -3.0)), ("example3", (3.0, -5.0))])
def test_builtin_parameters(name, x0):
    cfg = resolve(name)
    assert (cfg.alpha, cfg.omega, cfg.t0) == (0.95, 5.0, 0.0)
    assert cfg.x0 == x0
    assert (cfg.horizon, cfg.step) == (50.0, 0.01)


def test_builtin_checks():
    assert resolve("example1").compare_a == 1.0
    ex2 = resolve("example2")
    assert ex2.lam == 0.5 and ex2.V is not None
    ex3 = resolve("example3")
    assert ex3.exponents == (1, 2) and ex3.phi == 1.0


# ---------------------------------------------------------------- config validation

@pytest.mark.parametrize(
    "doc,fragment",
    [
        ("alpha = 1.5\nomega = 5\nx0 = 1\nf1 = -x1\n", "alpha"),
        ("alpha = 0.5\nomega = 5\nx0 = 1\nf1 = -x1\nstep = 0.03\n", "omega=5.0 is not an integer multiple"),
        ("alpha = 0.5\nomega = 1\nx0 = 1\nf1 = -x1\nhorizon = 1.005\n", "horizon"),
        ("alpha = 0.5\nx0 = 1\nf1 = -x1\n", "missing required keys: omega"),
        ("alpha = 0.5\nomega = 1\nx0 = 1\nf1 = -x1\nV = x1^2\n", "needs both V and lambda"),
        ("alpha = 0.5\nomega = 1\nx0 = 1\nf1 = -x1\nm = 1.5\nphi = 1\n", "m must list integers"),
        ("alpha = 0.5\nomega = 1\nx0 = 1, 2\nf1 = -x1\nf2 = -x2\ncompare_a = 1\n", "scalar"),
        ("alpha = 0.5\nomega = 1\nx0 = 1\nf1 = -x1 +\n", "syntax error"),
    ],
)
def test_config_errors_are_actionable(doc, fragment):
    with pytest.raises(ConfigError) as info:
        load_config(doc, "bad")
    assert fragment in str(info.value)


# ---------------------------------------------------------------- csv

def test_csv_round_trip(tmp_path):
    cfg = resolve("example3").replace(horizon=10.0)
    traj = solve_short_memory(cfg.system(), cfg.solve_config())
    path = write_trajectory_csv(tmp_path / "t.csv", traj)
    back = read_trajectory_csv(path)
    assert back.grid.n_steps == traj.grid.n_steps
    assert np.max(np.abs(back.values - traj.values)) <= 1e-10
    assert np.max(np.abs(back.times() - traj.times())) <= 1e-10
    text = path.read_bytes()
    assert text.startswith(b"t,x1,x2\n") and text.endswith(b"\n") and b"\r" not in text


# ---------------------------------------------------------------- commands

@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_scenario_command(name, tmp_path, capsys):
    assert main(["scenario", name, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    positions = [out.index(s) for s in SECTIONS]
    assert positions == sorted(positions)
    d = tmp_path / name
    rows = read_rows(d / "trajectory.csv")
    assert rows[0][0] == "t" and len(rows) == 5002
    assert (d / "report.txt").read_text() == out


def test_example1_writes_comparison(tmp_path):
    assert main(["scenario", "example1", "--out", str(tmp_path), "--quiet"]) == 0
    rows = read_rows(tmp_path / "example1" / "comparison.csv")
    assert rows[0] == ["t", "short", "bound", "violation"]
    data = np.array(rows[1:], dtype=float)
    assert np.all(data[:, 1] <= data[:, 2] + 1e-6)
    assert np.allclose(data[:, 3], data[:, 1] - data[:, 2], atol=1e-11)
    assert "comparison : holds" in (tmp_path / "example1" / "report.txt").read_text()


def test_out_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("FRACWIN_OUT_DIR", str(tmp_path / "env"))
    assert main(["compare", "example1", "--horizon", "10", "--quiet"]) == 0
    assert (tmp_path / "env" / "example1" / "comparison.csv").is_file()
    assert capsys.readouterr().out == ""


def test_lyapunov_exit_codes(tmp_path):
    assert main(["lyapunov", "example2", "--out", str(tmp_path), "--quiet", "--horizon", "20"]) == 0
    assert main(["lyapunov", "example2", "--out", str(tmp_path), "--quiet", "--lambda", "0.005"]) == 1


def test_theorem5_exit_codes(tmp_path):
    assert main(["theorem5", "example3", "--out", str(tmp_path), "--quiet", "--horizon", "5"]) == 0
    assert main(["theorem5", "example3", "--out", str(tmp_path), "--quiet", "--horizon", "5", "--phi", "1.5"]) == 1
    # the seed is recorded in the report
    assert main(["theorem5", "example3", "--out", str(tmp_path), "--quiet", "--horizon", "5", "--seed", "9"]) == 0
    assert "seed 9" in (tmp_path / "example3" / "report.txt").read_text()


def test_missing_check_is_a_config_error(tmp_path, capsys):
    assert main(["compare", "example2", "--out", str(tmp_path)]) == 2
    assert "does not configure" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["scenario", "nope"],
        ["scenario", "example1", "--step", "0.03"],
        ["scenario"],
        ["operator", "--kind", "short", "--alpha", "0.5", "--expr", "t", "--at", "1"],
        ["operator", "--kind", "caputo", "--alpha", "1.5", "--expr", "t", "--at", "1"],
        ["operator", "--kind", "caputo", "--alpha", "0.5", "--expr", "t +", "--at", "1"],
        ["operator", "--kind", "caputo", "--alpha", "0.5", "--expr", "x1", "--at", "1"],
        ["operator", "--kind", "caputo", "--alpha", "0.5", "--expr", "1/(t-0.5)", "--at", "1"],
        ["operator", "--kind", "caputo", "--alpha", "0.5", "--expr", "t", "--at", "1.005", "--step", "0.01"],
        ["sweep", "example2", "--axis", "alpha", "--values", "a,b"],
    ],
)
def test_error_exit_status(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == 2
    assert capsys.readouterr().err.startswith("fracwin: error:")


def test_blowup_gives_failing_status(tmp_path):
    cfg = tmp_path / "boom.cfg"
    cfg.write_text("name = boom\nalpha = 0.9\nomega = 1\nx0 = 1\nf1 = x1^2\nhorizon = 5\nV = x1^2\nlambda = 1\n")
    assert main(["scenario", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 1
    report = (tmp_path / "boom" / "report.txt").read_text()
    assert "aborted at node" in report and "not-certified(decay)" in report


@pytest.mark.parametrize(
    "args,value",
    [
        (["--kind", "short", "--alpha", "0.95", "--omega", "5", "--expr", "t", "--at", "20"], SHORT_T_095_5),
        (["--kind", "caputo", "--alpha", "0.3", "--expr", "1", "--at", "2"], 0.0),
        (["--kind", "rlint", "--alpha", "0.5", "--expr", "1", "--at", "1"], 1.1283791670955126),
    ],
)
def test_operator_command(args, value, capsys, tmp_path):
    assert main(["operator", *args, "--out", str(tmp_path), "--quiet"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(value, abs=1e-8)


def test_operator_sequence_csv(tmp_path, capsys):
    argv = ["operator", "--kind", "caputo", "--alpha", "0.5", "--expr", "t", "--at", "1", "--step", "0.1"]
    assert main(argv + ["--sequence", "--out", str(tmp_path), "--quiet"]) == 0
    rows = read_rows(tmp_path / "operator.csv")
    assert rows[0] == ["t", "caputo"] and len(rows) == 12
    assert float(rows[-1][1]) == pytest.approx(1.1283791670955126, rel=1e-10)


# ---------------------------------------------------------------- sweep

def test_sweep_omega_threshold_decreases():
    rows = run_sweep(resolve("example2").replace(horizon=10.0), "omega", [1.0, 5.0, 25.0])
    thr = [r["threshold"] for r in rows]
    assert thr[0] > thr[1] > thr[2]
    assert [r["value"] for r in rows] == [1.0, 5.0, 25.0]


def test_sweep_alpha_thresholds_match_oracle():
    rows = run_sweep(resolve("example2").replace(horizon=10.0), "alpha", [0.3, 0.6, 0.95])
    for r in rows:
        assert abs(r["threshold"] - THRESHOLD[(r["value"], 5)]) <= 1e-10


def test_sweep_lambda_verdicts(tmp_path, capsys):
    argv = ["sweep", "example2", "--axis", "lambda", "--values", "0.005,0.5", "--out", str(tmp_path), "--quiet"]
    assert main(argv) == 0
    rows = read_rows(tmp_path / "example2" / "sweep_lambda.csv")
    header = rows[0]
    col = header.index("lyapunov")
    assert [r[col] for r in rows[1:]] == ["not-certified(threshold)", "certified"]


def test_sweep_records_cell_errors():
    rows = run_sweep(resolve("example2").replace(horizon=10.0), "omega", [0.003, 5.0])
    assert "ConfigError" in rows[0]["error"]
    assert rows[1]["error"] == "" and rows[1]["lyapunov"] == "certified"


# ---------------------------------------------------------------- equilibrium shift

def test_x_star_moves_the_checks(tmp_path):
    cfg = tmp_path / "shift.cfg"
    cfg.write_text(
        "name = shifted\nalpha = 0.9\nomega = 2\nx0 = 4\nf1 = -(x1 - 2)\n"
        "m = 1\nphi = 1\nx_star = 2\nbox = -3:3\nhorizon = 10\nV = x1^2\nlambda = 0.5\n"
    )
    assert main(["scenario", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("alpha = 0.9\nomega = 2\nx0 = 4\nf1 = -(x1 - 2)\nm = 1\nphi = 1\nx_star = 1\n")
    assert main(["scenario", "--config", str(bad), "--out", str(tmp_path), "--quiet"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fracwin", "operator", "--kind", "caputo", "--alpha", "0.5", "--expr", "t", "--at", "1"],
        capture_output=True,
        text=True,
        cwd=tmp_path,
    )
    assert proc.returncode == 0
    assert float(proc.stdout) == pytest.approx(1.1283791670955126, rel=1e-10)


def test_scenario_result_exit_status():
    res = run(resolve("example2").replace(horizon=10.0, lam=0.005))
    assert not res.passed and res.exit_status == 1
