import numpy as np
import pytest

from lp2eigen.exceptions import FieldError, GridError
from lp2eigen.sphere_domain import (
    ScalarField,
    antipodal_reflect,
    build_grid,
    covariant_gradient,
    covariant_hessian,
    integrate,
    is_even,
    symmetry_defect,
)
from lp2eigen.utils import sphere_area


@pytest.mark.parametrize(
    "n, resolution", [(1, 8), (1, 256), (2, (8, 16)), (2, (48, 96)), (2, (24, 64))]
)
def test_weights_sum_to_sphere_area(n, resolution):
    grid = build_grid(n, resolution)
    assert abs(grid.weights.sum() - sphere_area(n)) <= 1e-12
    assert np.all(grid.weights > 0)


@pytest.mark.parametrize("n, resolution", [(1, 16), (2, (8, 16)), (2, (16, 32))])
def test_nodes_and_antipodes(n, resolution):
    grid = build_grid(n, resolution)
    assert np.allclose(np.linalg.norm(grid.nodes, axis=1), 1, atol=1e-15)
    antipodes = grid.antipode_index
    assert np.allclose(grid.nodes[antipodes], -grid.nodes, atol=1e-14)
    assert np.array_equal(antipodes[antipodes], np.arange(grid.size))
    assert not np.any(antipodes == np.arange(grid.size))


def test_no_node_at_the_poles():
    grid = build_grid(2, (8, 16))
    assert np.abs(grid.nodes[:, 2]).max() < 1


@pytest.mark.parametrize(
    "n, resolution",
    [(1, 7), (1, 6), (2, (9, 16)), (2, (8, 15)), (2, (6, 16)), (2, (8, 14)), (3, 8)],
)
def test_invalid_grids(n, resolution):
    with pytest.raises(GridError):
        build_grid(n, resolution)


def test_integrate_polynomials_exactly():
    grid = build_grid(2, (8, 16))
    assert abs(integrate(grid.sample(lambda x: x[:, 2] ** 2)) - 4 * np.pi / 3) < 1e-12
    assert abs(integrate(grid.sample(lambda x: x[:, 0] ** 2)) - 4 * np.pi / 3) < 1e-12
    assert abs(integrate(grid.sample(lambda x: x[:, 2] ** 4)) - 4 * np.pi / 5) < 1e-12
    assert abs(integrate(grid.sample(lambda x: x[:, 0] * x[:, 2]))) < 1e-12


def test_derivatives_of_constants_vanish():
    grid = build_grid(2, (16, 32))
    u = grid.sample(lambda x: 3.0)
    assert np.abs(covariant_gradient(u)).max() < 1e-9
    assert np.abs(covariant_hessian(u)).max() < 1e-9


def test_circle_hessian_of_linear_function():
    # hess(u) + u = 0 for the restriction of a linear function
    grid = build_grid(1, 64)
    u = grid.sample(lambda x: x[:, 0] + 2 * x[:, 1])
    h = covariant_hessian(u)[:, 0, 0] + u.values
    assert np.abs(h).max() < 1e-5


def _linear_h_error(resolution):
    grid = build_grid(2, resolution)
    u = grid.sample(lambda x: x[:, 2])
    h = covariant_hessian(u) + u.values[:, None, None] * np.eye(2)
    gradient = covariant_gradient(u)
    exact_gradient = np.column_stack([-np.sin(grid.coords[:, 0]), np.zeros(grid.size)])
    return np.abs(h).max(), np.abs(gradient - exact_gradient).max()


def test_second_order_convergence_on_cos_theta():
    h_coarse, grad_coarse = _linear_h_error((24, 48))
    h_fine, grad_fine = _linear_h_error((48, 96))
    assert h_fine < 5e-3
    assert np.log2(h_coarse / h_fine) >= 1.9
    assert np.log2(grad_coarse / grad_fine) >= 1.9


def test_hessian_commutes_with_antipodal_reflection():
    grid = build_grid(2, (16, 32))
    u = grid.sample(lambda x: 1 + 0.3 * x[:, 2] ** 2 + 0.2 * x[:, 0] * x[:, 1])
    radii = np.linalg.eigvalsh(covariant_hessian(u))
    reflected = np.linalg.eigvalsh(covariant_hessian(antipodal_reflect(u)))
    assert np.allclose(radii[grid.antipode_index], radii, atol=1e-8)
    assert np.allclose(reflected, radii, atol=1e-8)


def test_symmetry_defect():
    grid = build_grid(2, (8, 16))
    even = grid.sample(lambda x: 1 + x[:, 2] ** 2)
    odd = grid.sample(lambda x: x[:, 2])
    assert is_even(even)
    assert not is_even(odd)
    assert np.allclose(antipodal_reflect(odd).values, -odd.values, atol=1e-15)
    assert abs(symmetry_defect(odd) - 2 * odd.max()) < 1e-14


def test_scalar_field_validation():
    grid = build_grid(1, 8)
    with pytest.raises(FieldError):
        ScalarField(grid, np.ones(7))
    with pytest.raises(FieldError):
        ScalarField(grid, [1, 1, 1, 1, np.nan, 1, 1, 1])
    u = ScalarField(grid, np.ones(8))
    with pytest.raises(ValueError):
        u.values[0] = 2.0
    assert len(u) == 8
    assert u.sup_distance(u.with_values(np.full(8, 1.5))) == 0.5


def test_circle_interpolation():
    grid = build_grid(1, 64)
    spline = grid.interpolator(grid.sample(lambda x: np.exp(x[:, 0])).values)
    t = np.linspace(0, 2 * np.pi, 101)
    directions = 3 * np.column_stack([np.cos(t), np.sin(t)])
    assert np.abs(spline(directions) - np.exp(np.cos(t))).max() < 1e-5


def test_sphere_interpolation_across_the_poles():
    grid = build_grid(2, (48, 96))
    rng = np.random.default_rng(0)
    directions = rng.standard_normal((200, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    directions = np.vstack([directions, [[0, 0, 1], [0, 0, -1], [1e-3, 0, 1]]])
    unit = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    for func in (lambda x: x[:, 2], lambda x: x[:, 0], lambda x: x[:, 0] * x[:, 1]):
        spline = grid.interpolator(grid.sample(func).values)
        assert np.abs(spline(directions) - func(unit)).max() < 1e-3
