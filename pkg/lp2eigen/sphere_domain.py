"""
Module with the discretization of the unit circle S^1 and the unit sphere S^2.

The grids are structured: a uniform periodic grid in the angle t on S^1, and a
pole-offset colatitude-longitude grid on S^2, with nodes at
theta_j = (j + 1/2) pi / N_theta and phi_l = 2 pi l / N_phi. Fields on the grids are
flat arrays, indexed ``j * N_phi + l`` on S^2. Even resolutions make the grid closed
under the antipodal map x -> -x, which is used both for symmetry diagnostics and for
the ghost rule continuing fields over the poles:

    u(-theta, phi) = u(theta, phi + pi).

Covariant derivatives are taken in the orthonormal frame {d_t} on S^1 and
{d_theta, (1/sin theta) d_phi} on S^2 and are assembled once per grid as sparse
matrices, so that a gradient or a Hessian component of a field is a single sparse
matrix-vector product. The same matrices are reused as linear operators by the Newton
solver.
"""

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .exceptions import GridError, FieldError

# 4th order central stencils on a periodic grid (offsets, coefficients)
_D1_STENCIL = ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))
_D2_STENCIL = (
    (-2, -1 / 12),
    (-1, 16 / 12),
    (0, -30 / 12),
    (1, 16 / 12),
    (2, -1 / 12),
)
# number of ghost rows/columns padding the spline interpolation on S^2
_SPLINE_PAD = 3


def fejer_weights(n_nodes):
    """Quadrature weights for the pole-offset nodes in cos(theta).

    Fejer's first rule on x_j = cos(theta_j), theta_j = (j + 1/2) pi / N. The weights
    sum to 2 and integrate polynomials in cos(theta) of degree below N exactly.

    Parameters
    ----------
    n_nodes : int

    Returns
    -------
    numpy.ndarray

    Examples
    --------
    >>> float(round(fejer_weights(8).sum(), 14))
    2.0
    """
    theta = (np.arange(n_nodes) + 0.5) * np.pi / n_nodes
    m = np.arange(1, n_nodes // 2 + 1)
    series = np.cos(2 * np.outer(theta, m)) / (4 * m**2 - 1)
    return 2 / n_nodes * (1 - 2 * series.sum(axis=1))


class SphereGrid:
    """Class representing a structured grid on S^n, n in {1, 2}.

    A `SphereGrid` instantiated without exceptions satisfies all the grid invariants:
    unit nodes, weights summing to the sphere area, a fixed-point-free antipodal
    pairing and (on S^2) no node at a pole. Grids are never mutated after construction.

    Parameters
    ----------
    n : int
        Dimension of the sphere, 1 or 2.
    resolution : int or tuple[int]
        ``N`` for n=1, ``(N_theta, N_phi)`` for n=2. All entries must be even, with
        N >= 8, N_theta >= 8 and N_phi >= 16.

    Attributes
    ----------
    n : int
    resolution : tuple[int]
    size : int
        Number of nodes.
    nodes : numpy.ndarray
        Unit vectors, shape (size, n+1).
    coords : numpy.ndarray
        Chart coordinates, shape (size, n): (t,) on S^1, (theta, phi) on S^2.
    weights : numpy.ndarray
        Quadrature weight per node.
    antipode_index : numpy.ndarray
        Permutation mapping each node onto its antipodal node.
    spacing : tuple[float]
        Chart spacing, (h,) on S^1, (d_theta, d_phi) on S^2.
    order : int
        Consistency order of the differentiation stencils.
    grid_error : float
        Nominal discretization error ``max(spacing) ** order``.
    min_spacing : float
        Smallest geodesic distance between neighbouring nodes.
    frame : numpy.ndarray
        Orthonormal tangent frame per node, shape (size, n, n+1).
    gradient_operators : tuple[scipy.sparse.csr_matrix]
        One matrix per frame direction.

    Raises
    ------
    GridError
        If the dimension is unsupported or the resolution is odd or too coarse.
    """

    def __init__(self, n, resolution):
        if n not in (1, 2):
            raise GridError(f"Only S^1 and S^2 are supported, got n={n}")
        resolution = tuple(np.atleast_1d(resolution).astype(int).tolist())
        if len(resolution) != n:
            raise GridError(f"Resolution {resolution} does not match n={n}")
        minimal = (8,) if n == 1 else (8, 16)
        for num, num_min in zip(resolution, minimal):
            if num % 2:
                raise GridError(
                    f"Odd resolution {resolution} breaks the antipodal pairing"
                )
            if num < num_min:
                raise GridError(f"Resolution {resolution} below the minimum {minimal}")
        self.n = n
        self.resolution = resolution
        self.size = int(np.prod(resolution))
        self._hessian_operators = {}
        if n == 1:
            self._build_circle()
        else:
            self._build_sphere()
        self.grid_error = max(self.spacing) ** self.order

    def __repr__(self):
        return f"SphereGrid(n={self.n}, resolution={self.resolution})"

    def _build_circle(self):
        (num,) = self.resolution
        h = 2 * np.pi / num
        t = h * np.arange(num)
        self.coords = t[:, None]
        self.nodes = np.column_stack([np.cos(t), np.sin(t)])
        self.weights = np.full(num, h)
        self.antipode_index = (np.arange(num) + num // 2) % num
        self.spacing = (h,)
        self.min_spacing = h
        self.order = 4
        self.frame = np.column_stack([-np.sin(t), np.cos(t)])[:, None, :]

        index = np.arange(num)

        def periodic(stencil, scale):
            rows = np.concatenate([index for _ in stencil])
            cols = np.concatenate([(index + offset) % num for offset, _ in stencil])
            vals = np.concatenate([np.full(num, coef * scale) for _, coef in stencil])
            return sparse.coo_matrix((vals, (rows, cols)), shape=(num, num)).tocsr()

        self.gradient_operators = (periodic(_D1_STENCIL, 1 / h),)
        self._hessian_operators[0, 0] = periodic(_D2_STENCIL, 1 / h**2)

    def _build_sphere(self):
        n_theta, n_phi = self.resolution
        d_theta, d_phi = np.pi / n_theta, 2 * np.pi / n_phi
        jj, ll = np.meshgrid(np.arange(n_theta), np.arange(n_phi), indexing="ij")
        self._jj, self._ll = jj.ravel(), ll.ravel()
        theta = (self._jj + 0.5) * d_theta
        phi = self._ll * d_phi
        sin_t, cos_t = np.sin(theta), np.cos(theta)
        sin_p, cos_p = np.sin(phi), np.cos(phi)
        self.coords = np.column_stack([theta, phi])
        self.nodes = np.column_stack([sin_t * cos_p, sin_t * sin_p, cos_t])
        self.weights = fejer_weights(n_theta)[self._jj] * d_phi
        self.antipode_index = self.flat_index(
            n_theta - 1 - self._jj, self._ll + n_phi // 2
        )
        self.spacing = (d_theta, d_phi)
        self.min_spacing = min(d_theta, np.sin(d_theta / 2) * d_phi)
        self.order = 2
        e_theta = np.column_stack([cos_t * cos_p, cos_t * sin_p, -sin_t])
        e_phi = np.column_stack([-sin_p, cos_p, np.zeros_like(phi)])
        self.frame = np.stack([e_theta, e_phi], axis=1)

        d_t = self._stencil([(1, 0, 1), (-1, 0, -1)], 1 / (2 * d_theta))
        d_p = self._stencil([(0, 1, 1), (0, -1, -1)], 1 / (2 * d_phi))
        d_tt = self._stencil([(1, 0, 1), (0, 0, -2), (-1, 0, 1)], 1 / d_theta**2)
        d_pp = self._stencil([(0, 1, 1), (0, 0, -2), (0, -1, 1)], 1 / d_phi**2)
        d_tp = self._stencil(
            [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)],
            1 / (4 * d_theta * d_phi),
        )
        inv_sin = sparse.diags(1 / sin_t)
        cot = sparse.diags(cos_t / sin_t)
        self.gradient_operators = (d_t, (inv_sin @ d_p).tocsr())
        self._hessian_operators[0, 0] = d_tt
        self._hessian_operators[0, 1] = (inv_sin @ (d_tp - cot @ d_p)).tocsr()
        self._hessian_operators[1, 1] = (inv_sin @ inv_sin @ d_pp + cot @ d_t).tocsr()

    def flat_index(self, j, l):
        """Flat node index of chart indices on S^2, with the pole ghost rule applied.

        Colatitude indices outside ``[0, N_theta)`` are reflected over the nearest pole
        together with a half-turn in longitude; longitude indices wrap around.
        """
        n_theta, n_phi = self.resolution
        j, l = np.asarray(j), np.asarray(l)
        below, above = j < 0, j >= n_theta
        flipped = below | above
        j = np.where(below, -j - 1, np.where(above, 2 * n_theta - 1 - j, j))
        l = np.where(flipped, l + n_phi // 2, l) % n_phi
        return j * n_phi + l

    def _stencil(self, offsets, scale):
        rows = np.concatenate([np.arange(self.size) for _ in offsets])
        cols = np.concatenate(
            [self.flat_index(self._jj + dj, self._ll + dl) for dj, dl, _ in offsets]
        )
        vals = np.concatenate(
            [np.full(self.size, coef * scale) for *_, coef in offsets]
        )
        # duplicate entries (ghost columns folding back) are summed by tocsr
        return sparse.coo_matrix(
            (vals, (rows, cols)), shape=(self.size, self.size)
        ).tocsr()

    def hessian_operator(self, i, j):
        """Sparse matrix of the (i, j) covariant Hessian component."""
        return self._hessian_operators[min(i, j), max(i, j)]

    def field(self, values):
        return ScalarField(self, values)

    def sample(self, func):
        """Sample a function of the unit vectors onto the grid.

        Parameters
        ----------
        func : callable
            Maps an array of unit vectors of shape (size, n+1) to (size,) values.

        Returns
        -------
        ScalarField
        """
        values = np.asarray(func(self.nodes), dtype=float)
        values = np.broadcast_to(values, (self.size,))
        return ScalarField(self, values)

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def gradient(self, values):
        """Covariant gradient components, shape (size, n)."""
        return np.column_stack([op @ values for op in self.gradient_operators])

    def hessian(self, values):
        """Covariant Hessian, symmetric, shape (size, n, n)."""
        hess = np.empty((self.size, self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                hess[:, i, j] = hess[:, j, i] = self.hessian_operator(i, j) @ values
        return hess

    def tangent_vectors(self, components):
        """Lift frame components of shape (size, n) into R^{n+1}."""
        return np.einsum("ia,iax->ix", components, self.frame)

    def chart_coordinates(self, points):
        """Chart coordinates of arbitrary (not necessarily unit) directions."""
        points = np.asarray(points, dtype=float)
        if self.n == 1:
            return np.mod(np.arctan2(points[:, 1], points[:, 0]), 2 * np.pi)[:, None]
        radius = np.linalg.norm(points, axis=1)
        theta = np.arccos(np.clip(points[:, 2] / radius, -1.0, 1.0))
        phi = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2 * np.pi)
        return np.column_stack([theta, phi])

    def interpolator(self, values):
        return SphereInterpolator(self, values)


class SphereInterpolator:
    """Off-grid evaluation of a grid field.

    A periodic cubic spline in t on S^1; on S^2 a bicubic spline in (theta, phi) over
    the chart extended by a few ghost rows past each pole and wrapped columns in
    longitude, so that the spline is smooth across the chart boundaries.

    Parameters
    ----------
    grid : SphereGrid
    values : numpy.ndarray
    """

    def __init__(self, grid, values):
        self.grid = grid
        values = np.asarray(values, dtype=float)
        if grid.n == 1:
            t = np.append(grid.coords[:, 0], 2 * np.pi)
            self._spline = CubicSpline(
                t, np.append(values, values[0]), bc_type="periodic"
            )
        else:
            n_theta, n_phi = grid.resolution
            d_theta, d_phi = grid.spacing
            j_ext = np.arange(-_SPLINE_PAD, n_theta + _SPLINE_PAD)
            l_ext = np.arange(-_SPLINE_PAD, n_phi + _SPLINE_PAD)
            jj, ll = np.meshgrid(j_ext, l_ext, indexing="ij")
            table = values[grid.flat_index(jj, ll)]
            self._spline = RectBivariateSpline(
                (j_ext + 0.5) * d_theta, l_ext * d_phi, table, kx=3, ky=3
            )

    def __call__(self, directions):
        """Evaluate at an array of directions of shape (m, n+1)."""
        coords = self.grid.chart_coordinates(np.atleast_2d(directions))
        if self.grid.n == 1:
            return self._spline(coords[:, 0])
        return self._spline.ev(coords[:, 0], coords[:, 1])


class ScalarField:
    """One real value per node of a `SphereGrid`.

    Parameters
    ----------
    grid : SphereGrid
    values : array_like

    Raises
    ------
    FieldError
        If the number of values does not match the grid or any value is not finite.
    """

    def __init__(self, grid, values):
        values = np.array(values, dtype=float).ravel()
        if values.size != grid.size:
            raise FieldError(
                f"Field with {values.size} values on a grid with {grid.size} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise FieldError("Field values must be finite")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def __repr__(self):
        return f"ScalarField({self.grid!r}, min={self.min():.6g}, max={self.max():.6g})"

    def __len__(self):
        return self.values.size

    def with_values(self, values):
        return ScalarField(self.grid, values)

    def min(self):
        return float(self.values.min())

    def max(self):
        return float(self.values.max())

    def sup_distance(self, other):
        other = np.asarray(getattr(other, "values", other))
        return float(np.max(np.abs(self.values - other)))


def build_grid(n, resolution):
    """Build a grid on S^n.

    Examples
    --------
    >>> grid = build_grid(1, 8)
    >>> grid.size
    8
    >>> float(round(grid.weights.sum() / np.pi, 12))
    2.0
    """
    return SphereGrid(n, resolution)


def covariant_gradient(u):
    """Gradient of a field in the orthonormal frame, shape (size, n).

    Examples
    --------
    >>> grid = build_grid(1, 256)
    >>> u = grid.sample(lambda x: x[:, 0])
    >>> bool(np.allclose(covariant_gradient(u)[:, 0], -grid.nodes[:, 1], atol=1e-6))
    True
    """
    return u.grid.gradient(u.values)


def covariant_hessian(u):
    """Covariant Hessian of a field in the orthonormal frame, shape (size, n, n)."""
    return u.grid.hessian(u.values)


def integrate(u):
    """Quadrature of a field over the sphere.

    Examples
    --------
    >>> grid = build_grid(2, (8, 16))
    >>> abs(integrate(grid.sample(lambda x: x[:, 2] ** 2)) - 4 * np.pi / 3) < 1e-12
    True
    """
    return u.grid.integrate(u.values)


def antipodal_reflect(u):
    """The field x -> u(-x)."""
    return u.with_values(u.values[u.grid.antipode_index])


def symmetry_defect(u):
    """Sup-norm distance between a field and its antipodal reflection."""
    return u.sup_distance(antipodal_reflect(u))


def is_even(u, atol=1e-12):
    return symmetry_defect(u) <= atol * max(1.0, float(np.max(np.abs(u.values))))
