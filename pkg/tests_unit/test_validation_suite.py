import numpy as np
import pytest

from config.config import BOUND_RTOL
from lp2eigen.eigen_continuation import EigenReport
from lp2eigen.equation_solver import ProblemSpec, newton_solve
from lp2eigen.sphere_domain import build_grid
from lp2eigen.utils import unit_ball_volume
from lp2eigen.validation_suite import (
    BoundReport,
    c11_norm,
    check_gradient_bound,
    check_lambda_bounds,
    check_max_u_chain,
    check_volume_ratio,
    check_W_bound,
    half_sphere_moment,
    lambda_bracket,
    multi_start_guesses,
    run_solution_checks,
)

grid = build_grid(2, (16, 32))
spec = ProblemSpec(grid, k=1, p=3, f=np.ones(grid.size))
# the exact solution of the above problem
sphere = grid.sample(lambda x: 0.5)


def test_bound_report():
    assert BoundReport("a", 1.0, 1.0).satisfied
    assert BoundReport("a", 1 + 1e-9, 1.0).satisfied
    report = BoundReport("a", 1.001, 1.0)
    assert not report.satisfied
    assert report.slack == pytest.approx(-0.001)
    assert report.to_dict()["name"] == "a"


def test_bound_slack_covers_the_newton_tolerance():
    assert BoundReport("a", 1 + 0.5 * BOUND_RTOL, 1.0).satisfied
    assert not BoundReport("a", 1 + 2 * BOUND_RTOL, 1.0).satisfied
    start = grid.sample(lambda x: 0.5 + 0.05 * x[:, 0] ** 2)
    solution = newton_solve(spec, start)
    reports = run_solution_checks(solution, spec, with_properties=False)
    assert all(report.satisfied for report in reports)


def test_volume_ratio_is_tight_on_the_sphere():
    lower, upper = check_volume_ratio(sphere, spec)
    assert (lower.name, upper.name) == ("volume_ratio_lower", "volume_ratio_upper")
    for report in (lower, upper):
        assert report.satisfied
        assert abs(report.slack) < 1e-6
    # the uncorrected bounds would require the value 1
    assert "fail" in lower.notes


def test_max_u_chain_on_the_sphere():
    chain, moment, max_u = check_max_u_chain(sphere, spec)
    assert chain.name == "volume_lower_chain"
    assert chain.satisfied and abs(chain.slack) < 1e-6
    assert moment.satisfied and moment.slack > 0
    assert max_u.satisfied
    assert max_u.lhs == pytest.approx(0.5)


def test_half_sphere_moment_decreases_with_the_exponent():
    x0 = grid.nodes[0]
    moments = [half_sphere_moment(grid, x0, q) for q in (1.0, 2.0, 5.0, 9.0)]
    assert np.all(np.diff(moments) < 0)


def test_gradient_bound():
    assert check_gradient_bound(sphere).satisfied
    report = check_gradient_bound(grid.sample(lambda x: 1 + 0.1 * x[:, 2]))
    assert report.satisfied
    assert report.lhs == pytest.approx(0.1, rel=1e-2)


def test_W_bound_on_the_sphere():
    report = check_W_bound(sphere, spec)
    assert report.lhs == pytest.approx(1.0, abs=1e-10)
    assert report.rhs == pytest.approx(2.0, abs=1e-10)
    assert report.satisfied


def test_c11_norm():
    assert c11_norm(np.full(grid.size, 3.0), grid) == pytest.approx(3.0)
    assert c11_norm(-grid.nodes[:, 2], grid) >= 0.9


def test_solution_checks_without_properties():
    reports = run_solution_checks(sphere, spec, with_properties=False)
    assert [report.name for report in reports] == [
        "volume_ratio_lower",
        "volume_ratio_upper",
        "volume_lower_chain",
        "half_sphere_moment",
        "max_u",
        "gradient",
        "W",
    ]
    assert all(report.satisfied for report in reports)


def test_lambda_bracket_of_the_constant_data():
    eigen_spec = ProblemSpec(grid, k=1, p=2, psi=np.ones(grid.size))
    lower, upper = lambda_bracket(2.0, eigen_spec)
    assert lower == upper == pytest.approx(2.0)
    lower, _ = lambda_bracket(2.5, eigen_spec)
    assert lower == pytest.approx(2 * unit_ball_volume(2) ** (-1 / 6))


def _eigen_report(scale):
    p_list = [2.5, 2.25, 2.125]
    lambda_list = [scale * 2 * (4 * np.pi / 3) ** (-(p - 2) / 3) for p in p_list]
    return EigenReport(p_list=p_list, lambda_list=lambda_list, lambda0=2.0 * scale)


def test_lambda_bounds():
    eigen_spec = ProblemSpec(grid, k=1, p=2, psi=np.ones(grid.size))
    lower, upper = check_lambda_bounds(_eigen_report(1.0), eigen_spec)
    assert lower.satisfied and upper.satisfied
    assert lower.rhs == upper.rhs == 1.0
    lower, upper = check_lambda_bounds(_eigen_report(1.01), eigen_spec)
    assert lower.satisfied and not upper.satisfied
    lower, upper = check_lambda_bounds(_eigen_report(0.99), eigen_spec)
    assert not lower.satisfied and upper.satisfied


def test_multi_start_guesses():
    guesses = multi_start_guesses(spec, num_starts=3, seed=1)
    assert len(guesses) == 3
    assert guesses[0].max() == pytest.approx(0.7)
    for guess in guesses:
        assert guess.min() > 0
        assert guess.sup_distance(sphere) > 1e-3
