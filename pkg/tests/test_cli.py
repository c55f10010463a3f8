import csv
import json

import numpy as np
import pytest

from pcx import cli
from pcx.algorithm import RunConfig, run
from pcx.problem import load_problem

from conftest import TOY, TOY_EPS


@pytest.fixture
def toy_file(tmp_path):
    objectives, lo, hi = TOY
    path = tmp_path / "toy.json"
    data = {"name": "toy", "m": 1, "p": 2, "objectives": objectives, "lo": lo, "hi": hi, "defaults": {"eps": TOY_EPS}}
    path.write_text(json.dumps(data))
    return path


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_solve_writes_bundle(tmp_path, toy_file):
    out = tmp_path / "out"
    assert cli.main(["solve", str(toy_file), "--out-dir", str(out)]) == cli.EXIT_OK
    sol, boxes = rows(out / "solutions.csv"), rows(out / "boxes.csv")
    meta = json.loads((out / "meta.json").read_text())
    assert sol[0] == ["box_index", "x_1", "f_1", "f_2", "converged"]
    assert boxes[0] == ["box_index", "lo_1", "hi_1", "alpha_1", "alpha_2", "width", "L_tilde"]
    assert len(sol) - 1 == meta["n_solutions"]
    assert len(boxes) - 1 == meta["n_boxes"]
    assert meta["eps"] == TOY_EPS and meta["lambda"] == [0.5, 0.5]
    assert meta["solver"] == {"tol": 1e-8, "max_iter": 10000}


def test_solutions_round_trip_exactly(tmp_path, toy_file, toy_problem):
    out = tmp_path / "out"
    cli.main(["solve", str(toy_file), "--out-dir", str(out)])
    records, m, p = cli.read_solutions(out / "solutions.csv")
    expected = run(toy_problem, RunConfig(eps=TOY_EPS)).solutions.records
    assert (m, p) == (1, 2)
    assert records == expected


def test_t0_below_t_eps_is_clamped(tmp_path, toy_file):
    out = tmp_path / "out"
    assert cli.main(["solve", str(toy_file), "--t0", "1", "--out-dir", str(out)]) == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["t0_clamped"] and meta["t0_requested"] == 1
    assert meta["t0_used"] == meta["t_eps"] > 1


def test_missing_file(tmp_path, capsys):
    assert cli.main(["solve", str(tmp_path / "nope.json")]) == cli.EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_invalid_problem_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "bad", "m": 1, "p": 2, "objectives": ["x1 +", "x1"], "lo": [0], "hi": [1]}))
    assert cli.main(["solve", str(bad), "--out-dir", str(tmp_path)]) == cli.EXIT_INPUT


def test_pole_in_box_fails_validation(tmp_path):
    bad = tmp_path / "pole.json"
    bad.write_text(json.dumps({"name": "pole", "m": 1, "p": 2, "objectives": ["1/x1", "x1"], "lo": [-1], "hi": [1]}))
    assert cli.main(["solve", str(bad), "--out-dir", str(tmp_path)]) == cli.EXIT_INPUT


def test_domain_error_exit(tmp_path):
    # the value is defined on the box but its derivative has a pole at 0
    bad = tmp_path / "root.json"
    bad.write_text(json.dumps({"name": "root", "m": 1, "p": 2, "objectives": ["sqrt(x1)", "x1"], "lo": [0], "hi": [1]}))
    assert cli.main(["solve", str(bad), "--out-dir", str(tmp_path)]) == cli.EXIT_DOMAIN


@pytest.mark.parametrize("weights", ["0.5,0.6", "1", "a,b", "1.5,-0.5"])
def test_bad_lambda(tmp_path, toy_file, weights):
    assert cli.main(["solve", str(toy_file), "--lambda", weights, "--out-dir", str(tmp_path)]) == cli.EXIT_INPUT


def test_lambda_within_tolerance(tmp_path, toy_file):
    assert cli.main(["solve", str(toy_file), "--lambda", "0.3,0.7000000001", "--out-dir", str(tmp_path)]) == 0


def test_threads_from_environment(tmp_path, toy_file, monkeypatch):
    monkeypatch.setenv("PCX_THREADS", "2")
    assert cli.main(["solve", str(toy_file), "--out-dir", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("PCX_THREADS", "x")
    assert cli.main(["solve", str(toy_file), "--out-dir", str(tmp_path / "b")]) == cli.EXIT_INPUT


def test_literal_run_of_example_51_exceeds_budget(tmp_path, capsys):
    assert cli.main(["solve", "ex51", "--out-dir", str(tmp_path)]) == cli.EXIT_BUDGET
    assert "t_eps=44" in capsys.readouterr().err


def test_verify_pipeline_passes(tmp_path, toy_file):
    out = tmp_path / "out"
    cli.main(["solve", str(toy_file), "--out-dir", str(out)])
    code = cli.main(["verify", str(out / "solutions.csv"), str(toy_file), "--resolution", "2001", "--eps", str(TOY_EPS)])
    assert code == cli.EXIT_OK


def test_verify_reports_planted_row(tmp_path, toy_file, capsys):
    out = tmp_path / "out"
    cli.main(["solve", str(toy_file), "--out-dir", str(out)])
    n = len(rows(out / "solutions.csv"))
    with open(out / "solutions.csv", "a") as fh:
        # x1 = 1 gives f = (0, 0.25); (0.5, 0.5) is dominated far beyond eps
        fh.write("999,0.5,0.5,0.5,1\n")
    capsys.readouterr()
    code = cli.main(["verify", str(out / "solutions.csv"), str(toy_file), "--resolution", "201", "--eps", str(TOY_EPS)])
    assert code == cli.EXIT_VIOLATION
    printed = capsys.readouterr().out
    assert f"row {n + 1} (box_index 999)" in printed


def test_verify_empty_file(tmp_path, toy_file, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert cli.main(["verify", str(empty), str(toy_file)]) == cli.EXIT_OK
    assert "warning" in capsys.readouterr().err


def test_front_filters_rows(tmp_path):
    src = tmp_path / "s.csv"
    src.write_text("box_index,x_1,f_1,f_2,converged\n0,0,1,2,1\n1,0,2,1,1\n2,0,2,2,1\n")
    assert cli.main(["front", str(src)]) == 0
    front = rows(tmp_path / "front.csv")
    assert front[1:] == [["0", "0", "1", "2", "1"], ["1", "0", "2", "1", "1"]]
    again = tmp_path / "again.csv"
    cli.main(["front", str(tmp_path / "front.csv"), "--out", str(again)])
    assert rows(again) == front


def test_front_of_example_54(tmp_path):
    result = run(load_problem("ex54"), RunConfig(t0=4, strategy="fixed"))
    src = tmp_path / "solutions.csv"
    cli.write_solutions(src, result.archive, 4, 4)
    cli.main(["front", str(src)])
    front = rows(tmp_path / "front.csv")
    assert [h for h in front[0] if h.startswith("f_")] == ["f_1", "f_2", "f_3", "f_4"]
    assert 1 <= len(front) - 1 <= len(result.archive)


def test_oracle_corners(tmp_path):
    path = tmp_path / "line.json"
    path.write_text(json.dumps({"name": "line", "m": 1, "p": 2, "objectives": ["x1", "1 - x1"], "lo": [0], "hi": [1]}))
    out = tmp_path / "front.csv"
    assert cli.main(["oracle", str(path), "--resolution", "2", "--out", str(out)]) == 0
    assert rows(out)[1:] == [["0", "0", "1"], ["1", "1", "0"]]


def _front(path):
    data = np.array(rows(path)[1:], dtype=float)
    return data[np.argsort(data[:, -2])]


def test_oracle_example_53_is_disconnected(tmp_path):
    out = tmp_path / "front.csv"
    cli.main(["oracle", "ex53", "--resolution", "500", "--out", str(out)])
    f1 = _front(out)[:, 2]
    assert (np.diff(f1) > 0.05).sum() >= 2


def test_oracle_example_51_range(tmp_path):
    out = tmp_path / "front.csv"
    cli.main(["oracle", "ex51", "--resolution", "400", "--out", str(out)])
    f1 = _front(out)[:, 2]
    assert f1.min() >= 0.1 - 1e-12 and f1.max() <= 1.0 + 1e-12
    assert f1.max() - f1.min() > 0.8


def test_oracle_eps_filter(tmp_path):
    plain, coarse = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(["oracle", "ex53", "--resolution", "60", "--out", str(plain)])
    cli.main(["oracle", "ex53", "--resolution", "60", "--eps", "0.05", "--out", str(coarse)])
    # points not eps-dominated by any grid point include the whole front
    assert {tuple(r) for r in rows(plain)} <= {tuple(r) for r in rows(coarse)}
