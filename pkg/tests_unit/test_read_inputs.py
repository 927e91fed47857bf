import pytest

from config.config import OUTPUT_DIR
from lp2eigen.exceptions import ConfigInputError, PresetError
from lp2eigen.read_inputs import parse_config, parse_lines, read_config

eigen_text = """\
# minimal eigen run
mode = eigen
problem.n = 2
problem.k = 1
problem.psi = constant:1
grid.n_theta = 8
grid.n_phi = 16
"""

solve_text = """\
mode = solve
problem.n = 2
problem.k = 2
problem.p = 4
problem.f = harmonic_even:1,0.1,z
grid.n_theta = 8
grid.n_phi = 16
schedule.warm_start = no
flow.dt = none
"""


def test_minimal_eigen_config():
    config = parse_config(eigen_text)
    assert config.mode == "eigen"
    assert config.p == 2.0
    assert config.lam == 1.0
    assert config.resolution == (8, 16)
    assert config.data_key == "psi"
    assert (config.data_name, config.data_params) == ("constant", ["1"])
    assert config.schedule_base == 2.0 and config.schedule_steps == 8
    assert config.output_dir == OUTPUT_DIR / "eigen"
    assert config.raw_input["problem.psi"] == "constant:1"
    assert config.echo()["mode"] == "eigen"


def test_default_resolution():
    text = "problem.n = 2\nproblem.k = 1\nproblem.psi = constant:2"
    assert parse_config(text, "eigen").resolution == (48, 96)
    text = "problem.n = 1\nproblem.k = 1\nproblem.p = 3\nproblem.f = constant:2"
    assert parse_config(text, "solve").resolution == (256,)


def test_solve_config():
    config = parse_config(solve_text)
    assert config.p == 4.0
    assert config.warm_start is False
    assert config.dt is None
    spec = config.problem_spec()
    assert (spec.n, spec.k, spec.p) == (2, 2, 4.0)
    assert spec.f.max() == pytest.approx(1.1, abs=1e-2)


def test_mode_override():
    config = parse_config(solve_text.replace("problem.k = 2", "problem.k = 1"), "eigen")
    assert config.mode == "eigen"
    assert config.p == 2.0


def test_degree_out_of_range():
    with pytest.raises(ConfigInputError, match="line 4"):
        parse_config(eigen_text.replace("problem.k = 1", "problem.k = 3"))


def test_eigen_mode_requires_k_below_n():
    text = eigen_text.replace("problem.k = 1", "problem.k = 2")
    with pytest.raises(ConfigInputError, match="k < n required for eigen mode"):
        parse_config(text)
    # k = n is fine for the L_p problem
    assert parse_config(text + "problem.p = 4\n", "solve").k == 2


def test_non_positive_preset():
    text = eigen_text.replace("constant:1", "harmonic_even:-1,0.5,z")
    with pytest.raises(PresetError, match="line 5"):
        parse_config(text)


def test_non_even_psi_in_eigen_mode():
    text = eigen_text.replace("constant:1", "harmonic_odd:1,0.5,z")
    with pytest.raises(ConfigInputError, match="--allow-non-even"):
        parse_config(text)
    assert not parse_config(text, allow_non_even=True).even_data


@pytest.mark.parametrize(
    "line, message",
    [
        ("problem.q = 1", "Unknown key"),
        ("problem.n = 3", "Duplicate key"),
        ("problem.lambda", "Expected 'key = value'"),
        ("problem.lambda =", "Missing value"),
        ("schedule.steps = many", "Invalid value"),
        ("schedule.warm_start = maybe", "Invalid value"),
    ],
)
def test_malformed_lines(line, message):
    with pytest.raises(ConfigInputError, match=f"line 8: {message}"):
        parse_config(eigen_text + line)


@pytest.mark.parametrize(
    "text",
    [
        solve_text.replace("problem.p = 4", "problem.p = 3"),
        solve_text.replace("problem.p = 4\n", ""),
        solve_text.replace("problem.f = harmonic_even:1,0.1,z\n", ""),
        solve_text + "problem.psi = constant:1\n",
        solve_text.replace("mode = solve", "mode = relax"),
        solve_text.replace("mode = solve\n", ""),
        solve_text + "solver.margin = 2\n",
        solve_text.replace("grid.n_theta = 8", "grid.n_theta = 7"),
    ],
)
def test_inconsistent_solve_configs(text):
    with pytest.raises(ConfigInputError):
        parse_config(text).problem_spec()


def test_validate_config():
    text = "mode = validate\nvalidate.solution = output/solve/report.json"
    config = parse_config(text)
    assert config.solution.name == "report.json"
    with pytest.raises(ConfigInputError, match="validate.solution"):
        parse_config("mode = validate")


def test_parse_lines_keeps_line_numbers():
    entries = parse_lines(eigen_text)
    assert entries["mode"] == ("eigen", 2)
    assert entries["grid.n_phi"] == ("16", 7)


def test_read_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(eigen_text, encoding="utf-8")
    assert read_config(path).k == 1
    with pytest.raises(ConfigInputError, match="not found"):
        read_config(tmp_path / "missing.cfg")


def test_read_config_falls_back_to_the_input_dir():
    config = read_config("solve_sphere.cfg")
    assert config.mode == "solve"
    assert config.k == 1
