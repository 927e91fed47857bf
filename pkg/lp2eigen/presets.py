"""
Module with the closed-form data functions (f or psi) selectable in run configurations.

A data function is specified as ``name:param,param,...``, e.g. ``constant:1`` or
``harmonic_even:1,0.1,z``. The available presets (x a unit direction, axis one of
x, y, z, with z unavailable on S^1):

    constant:c                      c
    harmonic_even:c,eps[,axis]      c + eps <x, axis>^2
    harmonic_odd:c,eps[,axis]       c + eps <x, axis>, requires c > |eps|
    band:c,eps,m                    c + eps Re((x_0 + i x_1)^m), m even,
                                    i.e. c + eps cos(m phi) sin(theta)^m on S^2
    polynomial:a_0,...,a_d[,axis]   sum_j a_j <x, axis>^j

All presets except harmonic_odd (and polynomial with odd powers) are even.
"""

import numpy as np

from .exceptions import PresetError

AXES = {"x": 0, "y": 1, "z": 2}


def _axis(name, grid):
    if name not in AXES or AXES[name] > grid.n:
        raise PresetError(f"Invalid axis '{name}' for the sphere S^{grid.n}")
    return grid.nodes[:, AXES[name]]


def _split_axis(params):
    """Trailing axis letter of a parameter list, z by default."""
    params = list(params)
    if params and str(params[-1]).strip() in AXES:
        return params[:-1], str(params[-1]).strip()
    return params, "z"


def _floats(params, name, count=None):
    try:
        values = [float(param) for param in params]
    except ValueError:
        raise PresetError(f"Non-numeric parameter in preset '{name}': {params}")
    if count is not None and len(values) != count:
        raise PresetError(
            f"Preset '{name}' expects {count} numeric parameters, got {len(values)}"
        )
    return values


def _constant(params, grid):
    (c,) = _floats(params, "constant", 1)
    return np.full(grid.size, c)


def _harmonic_even(params, grid):
    params, axis = _split_axis(params)
    c, eps = _floats(params, "harmonic_even", 2)
    return c + eps * _axis(axis, grid) ** 2


def _harmonic_odd(params, grid):
    params, axis = _split_axis(params)
    c, eps = _floats(params, "harmonic_odd", 2)
    if not c > abs(eps):
        raise PresetError(f"harmonic_odd requires c > |eps|, got c={c}, eps={eps}")
    return c + eps * _axis(axis, grid)


def _band(params, grid):
    c, eps, m = _floats(params, "band", 3)
    if m != int(m) or m < 0 or int(m) % 2:
        raise PresetError(f"band requires an even non-negative integer m, got {m}")
    planar = grid.nodes[:, 0] + 1j * grid.nodes[:, 1]
    return c + eps * np.real(planar ** int(m))


def _polynomial(params, grid):
    params, axis = _split_axis(params)
    coefficients = _floats(params, "polynomial")
    if not coefficients:
        raise PresetError("polynomial requires at least one coefficient")
    # np.polyval takes the highest degree first
    return np.polyval(coefficients[::-1], _axis(axis, grid))


PRESETS = {
    "constant": _constant,
    "harmonic_even": _harmonic_even,
    "harmonic_odd": _harmonic_odd,
    "band": _band,
    "polynomial": _polynomial,
}


def parse_preset(text):
    """Split a ``name:params`` string.

    Examples
    --------
    >>> parse_preset("harmonic_even: 1, 0.1, z")
    ('harmonic_even', ['1', '0.1', 'z'])
    >>> parse_preset("constant:2")
    ('constant', ['2'])
    """
    name, _, params = text.partition(":")
    name = name.strip()
    if name not in PRESETS:
        raise PresetError(
            f"Unknown preset '{name}', available presets: {', '.join(PRESETS)}"
        )
    params = [param.strip() for param in params.split(",") if param.strip()]
    return name, params


def preset_function(name, params, grid):
    """Sample a preset data function onto the grid.

    Parameters
    ----------
    name : str
    params : list
        Numbers and/or strings (an axis letter where the preset accepts one).
    grid : SphereGrid

    Returns
    -------
    ScalarField

    Raises
    ------
    PresetError
        If the preset is unknown, its parameters are invalid or its values are not
        strictly positive on the grid.
    """
    if name not in PRESETS:
        raise PresetError(f"Unknown preset '{name}'")
    values = PRESETS[name](params, grid)
    if not np.all(values > 0):
        raise PresetError(
            f"Preset '{name}' with parameters {list(params)} is not positive on the "
            f"grid (min value {values.min():.3e})"
        )
    return grid.field(values)
