import json

import pandas as pd
import pytest

from lp2eigen.process_run import (
    EXIT_CONFIG_ERROR,
    EXIT_SOLVER_FAILURE,
    EXIT_SUCCESS,
    RunProcessor,
    process_run,
)
from lp2eigen.read_inputs import parse_config
from process import main

solve_cfg = """\
# the solution is the sphere of radius 1/2
mode = solve
problem.n = 2
problem.k = 1
problem.p = 3
problem.f = constant:1
grid.n_theta = 8
grid.n_phi = 16
solver.initial = constant:0.7
"""

eigen_cfg = """\
mode = eigen
problem.n = 2
problem.k = 1
problem.psi = constant:1
grid.n_theta = 16
grid.n_phi = 32
"""

flow_cfg = """\
mode = flow
problem.n = 2
problem.k = 1
problem.p = 3
problem.f = harmonic_even:1,0.1,z
grid.n_theta = 8
grid.n_phi = 16
flow.t_max = 0
solver.initial = polynomial:0.5,0,0.05,x
"""

curve_cfg = """\
mode = solve
problem.n = 1
problem.k = 1
problem.p = 4
problem.f = harmonic_even:1,0.2,x
grid.n_points = 64
checks.properties = no
"""


@pytest.fixture
def write_cfg(tmp_path):
    def write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


def _load_report(output_dir):
    with open(output_dir / "report.json") as fp:
        return json.load(fp)


def test_solve_run(write_cfg, tmp_path):
    out = tmp_path / "solve"
    assert process_run(write_cfg(solve_cfg), output_dir=out) == EXIT_SUCCESS
    report = _load_report(out)
    assert report["mode"] == "solve"
    assert report["config"]["problem.f"] == "constant:1"
    assert report["grid"] == {
        "n": 2,
        "resolution": [8, 16],
        "size": 128,
        "grid_error": pytest.approx((2 * 3.141592653589793 / 16) ** 2),
    }
    assert report["checks_passed"]
    assert report["result"]["final_residual_sup"] <= 1e-8
    assert report["result"]["barrier_radius"] == pytest.approx(1 + 1e-6)
    assert max(abs(value - 0.5) for value in report["solution"]) <= 1e-6

    with open(out / "bounds.json") as fp:
        bounds = json.load(fp)
    assert {"volume_ratio_lower", "max_u", "W", "multi_start"} <= {
        bound["name"] for bound in bounds
    }
    assert all(bound["satisfied"] for bound in bounds)

    lines = (out / "shape.obj").read_text().splitlines()
    vertices = [line for line in lines if line.startswith("v ")]
    faces = [list(map(int, line.split()[1:])) for line in lines if line[0] == "f"]
    assert len(vertices) == 128
    assert min(min(face) for face in faces) == 1
    assert max(max(face) for face in faces) == 128


def test_reports_are_deterministic(write_cfg, tmp_path):
    path = write_cfg(solve_cfg)
    process_run(path, output_dir=tmp_path / "first")
    process_run(path, output_dir=tmp_path / "second")
    first = (tmp_path / "first" / "report.json").read_bytes()
    assert first == (tmp_path / "second" / "report.json").read_bytes()


def test_output_dir_not_empty(write_cfg, tmp_path, capsys):
    out = tmp_path / "taken"
    out.mkdir()
    (out / "report.json").write_text("{}")
    path = write_cfg(solve_cfg)
    with pytest.raises(FileExistsError):
        process_run(path, output_dir=out)
    exit_code = process_run(path, output_dir=out, raise_exceptions=False)
    assert exit_code == EXIT_CONFIG_ERROR
    captured = capsys.readouterr().out
    assert "run.cfg: CONFIGURATION ABORTED: FileExistsError" in captured


def test_config_error(write_cfg, tmp_path, capsys):
    path = write_cfg(solve_cfg.replace("problem.p = 3", "problem.p = 1.5"))
    exit_code = process_run(path, output_dir=tmp_path, raise_exceptions=False)
    assert exit_code == EXIT_CONFIG_ERROR
    assert "line 5" in capsys.readouterr().out


def test_solver_failure(write_cfg, tmp_path, capsys):
    path = write_cfg(solve_cfg + "solver.max_iter = 1\n")
    exit_code = process_run(
        path, output_dir=tmp_path / "out", raise_exceptions=False
    )
    assert exit_code == EXIT_SOLVER_FAILURE
    assert "SOLVE ABORTED: SolverError" in capsys.readouterr().out


def test_eigen_run(write_cfg, tmp_path):
    out = tmp_path / "eigen"
    assert process_run(write_cfg(eigen_cfg), output_dir=out) == EXIT_SUCCESS
    report = _load_report(out)
    assert report["result"]["lambda0"] == pytest.approx(2.0, abs=1e-3)
    assert report["result"]["verified"]
    table = pd.read_csv(out / "lambda_table.csv")
    assert len(table) == 8
    assert list(table.columns) == [
        "p",
        "lambda_p",
        "V",
        "log_V",
        "residual",
        "symmetry_defect",
    ]
    with open(out / "bounds.json") as fp:
        names = [bound["name"] for bound in json.load(fp)]
    assert "cross_method" in names and "schedule_independence" in names
    assert (out / "shape.obj").is_file()


def test_flow_run_without_time_budget(write_cfg, tmp_path):
    out = tmp_path / "flow"
    assert process_run(write_cfg(flow_cfg), output_dir=out) == EXIT_SUCCESS
    report = _load_report(out)
    assert report["result"]["converged"] is False
    assert report["result"]["steps"] == 0
    history = pd.read_csv(out / "flow_history.csv")
    assert list(history.columns) == ["t", "V", "residual"]
    assert len(history) == 1
    assert not (out / "snapshots").exists()


def test_validate_replays_the_checks(write_cfg, tmp_path):
    solved = tmp_path / "solve"
    process_run(write_cfg(solve_cfg), output_dir=solved)
    validate_cfg = (
        f"mode = validate\nvalidate.solution = {solved / 'report.json'}\n"
        "checks.properties = no\n"
    )
    out = tmp_path / "validate"
    path = write_cfg(validate_cfg, "validate.cfg")
    assert process_run(path, output_dir=out) == EXIT_SUCCESS
    report = _load_report(out)
    assert report["result"]["source_mode"] == "solve"
    assert report["checks_passed"]
    with open(out / "bounds.json") as fp:
        assert len(json.load(fp)) == 7


def test_validate_missing_solution(tmp_path):
    config = parse_config(
        f"mode = validate\nvalidate.solution = {tmp_path / 'none.json'}\n"
        f"output.dir = {tmp_path / 'out'}"
    )
    assert process_run(config, raise_exceptions=False) == EXIT_CONFIG_ERROR


def test_curve_run(write_cfg, tmp_path):
    out = tmp_path / "curve"
    assert process_run(write_cfg(curve_cfg), output_dir=out) == EXIT_SUCCESS
    shape = pd.read_csv(out / "shape.csv")
    assert list(shape.columns) == ["x", "y"]
    assert len(shape) == 65
    assert not (out / "shape.obj").exists()


def test_run_processor_from_parsed_config(tmp_path):
    config = parse_config(solve_cfg + f"output.dir = {tmp_path / 'parsed'}\n")
    processor = RunProcessor(config)
    assert processor.process()
    assert processor.solution.min() == pytest.approx(0.5, abs=1e-6)


def test_command_line(write_cfg, tmp_path):
    path = write_cfg(solve_cfg.replace("mode = solve\n", ""))
    out = tmp_path / "cli"
    assert main(["solve", "--config", str(path), "--out", str(out)]) == EXIT_SUCCESS
    assert (out / "report.json").is_file()
    with pytest.raises(SystemExit):
        main(["relax", "--config", str(path)])


def _as_eigen_report(stored):
    config = stored["config"]
    config["mode"] = "eigen"
    config["problem.psi"] = config.pop("problem.f")
    del stored["result"]


@pytest.mark.parametrize(
    "damage",
    [
        lambda stored: stored["solution"].pop(),
        lambda stored: stored["config"].update({"problem.q": "1"}),
        lambda stored: stored["config"].pop("mode"),
        _as_eigen_report,
    ],
)
def test_validate_damaged_report(write_cfg, tmp_path, capsys, damage):
    solved = tmp_path / "solve"
    process_run(write_cfg(solve_cfg), output_dir=solved)
    stored = _load_report(solved)
    damage(stored)
    path = tmp_path / "damaged.json"
    path.write_text(json.dumps(stored), encoding="utf-8")
    config = parse_config(
        f"mode = validate\nvalidate.solution = {path}\n"
        f"output.dir = {tmp_path / 'out'}\n"
    )
    assert process_run(config, raise_exceptions=False) == EXIT_CONFIG_ERROR
    assert "CONFIGURATION ABORTED: ConfigInputError" in capsys.readouterr().out


def test_validate_invalid_json(tmp_path):
    path = tmp_path / "report.json"
    path.write_text('{"config": ', encoding="utf-8")
    config = parse_config(
        f"mode = validate\nvalidate.solution = {path}\n"
        f"output.dir = {tmp_path / 'out'}\n"
    )
    assert process_run(config, raise_exceptions=False) == EXIT_CONFIG_ERROR
