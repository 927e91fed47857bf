import numpy as np
import pytest

from lp2eigen.exceptions import ConfigInputError, PresetError
from lp2eigen.presets import parse_preset, preset_function
from lp2eigen.sphere_domain import build_grid, is_even

grid_s1 = build_grid(1, 16)
grid_s2 = build_grid(2, (16, 32))


def test_constant():
    f = preset_function("constant", ["1"], grid_s2)
    assert np.array_equal(f.values, np.ones(grid_s2.size))


def test_harmonic_even():
    f = preset_function("harmonic_even", [1, 0.1, "z"], grid_s2)
    assert is_even(f)
    assert np.allclose(f.values, 1 + 0.1 * grid_s2.nodes[:, 2] ** 2)
    # the axis defaults to z
    assert f.sup_distance(preset_function("harmonic_even", [1, 0.1], grid_s2)) == 0


def test_harmonic_odd():
    f = preset_function("harmonic_odd", [1, 0.5, "z"], grid_s2)
    assert f.min() > 0.5
    assert not is_even(f)
    with pytest.raises(PresetError):
        preset_function("harmonic_odd", [0.5, 0.5], grid_s2)


def test_band():
    f = preset_function("band", [1, 0.1, 2], grid_s2)
    assert is_even(f)
    theta, phi = grid_s2.coords.T
    assert np.allclose(f.values, 1 + 0.1 * np.cos(2 * phi) * np.sin(theta) ** 2)
    g = preset_function("band", [1, 0.1, 4], grid_s1)
    assert np.allclose(g.values, 1 + 0.1 * np.cos(4 * grid_s1.coords[:, 0]))
    with pytest.raises(PresetError):
        preset_function("band", [1, 0.1, 3], grid_s2)


def test_polynomial():
    f = preset_function("polynomial", [1, 0, 0.1, "x"], grid_s2)
    assert np.allclose(f.values, 1 + 0.1 * grid_s2.nodes[:, 0] ** 2)
    g = preset_function("polynomial", ["2"], grid_s1)
    assert np.allclose(g.values, 2.0)


@pytest.mark.parametrize(
    "name, params, grid",
    [
        ("harmonic_even", [-1, 0.5], grid_s2),
        ("constant", [0], grid_s2),
        ("constant", [1, 2], grid_s2),
        ("constant", ["one"], grid_s2),
        ("harmonic_even", [1, 0.1, "z"], grid_s1),
        ("polynomial", [], grid_s2),
        ("spherical", [1], grid_s2),
    ],
)
def test_invalid_presets(name, params, grid):
    with pytest.raises(PresetError):
        preset_function(name, params, grid)


def test_parse_preset():
    assert parse_preset("band:1, 0.05, 2") == ("band", ["1", "0.05", "2"])
    assert parse_preset(" constant : 3 ") == ("constant", ["3"])
    with pytest.raises(ConfigInputError):
        parse_preset("sphere:1")
