"""
Module with the geometry of closed convex and star-shaped hypersurfaces, described
either by the support function u or by the radial function rho over the unit sphere.

Support description: h = hess(u) + u I, whose eigenvalues are the principal radii
(reciprocal principal curvatures); the hypersurface is the image of the inverse Gauss
map X = u x + grad(u), and (n+1) V = int u det(h).

Radial description: X = rho x, with

    w = sqrt(rho^2 + |grad(rho)|^2),
    g = rho^2 I + grad(rho) grad(rho)^T,
    h = (rho^2 I + 2 grad(rho) grad(rho)^T - rho hess(rho)) / w,
    nu = (rho x - grad(rho)) / w,
    <X, nu> = rho^2 / w,

the principal curvatures being the eigenvalues of h relative to g, and
(n+1) V = int rho^(n+1).

Geometric assembly never aborts on inadmissible input, the bundles carry flags instead.
Only the operations which need a convex body (embedding, conversion, meshes) raise.
"""

import numpy as np
from scipy.spatial import ConvexHull

from .exceptions import ShapeError

# direction-map inversion used by the conversions between the two descriptions
_INVERSION_TOL = 1e-12
_INVERSION_MAX_ITER = 100
_INVERSION_MAX_STEP = 0.5


class ShapeBundle:
    """Derived geometry of a support function.

    Parameters
    ----------
    u : ScalarField

    Attributes
    ----------
    u : ScalarField
    gradient : numpy.ndarray
        Covariant gradient of u, shape (size, n).
    h : numpy.ndarray
        hess(u) + u I, shape (size, n, n).
    radii : numpy.ndarray
        Principal radii (eigenvalues of h, ascending), shape (size, n).
    kappa : numpy.ndarray
        Principal curvatures 1 / radii (infinite where a radius vanishes).
    W : ScalarField
        tr(h) = laplacian(u) + n u.
    volume : float
        Enclosed volume by the support route, int u det(h) / (n+1).
    convex : bool
    star_shaped : bool
    """

    def __init__(self, u):
        grid = u.grid
        self.u = u
        self.gradient = grid.gradient(u.values)
        self.h = grid.hessian(u.values) + u.values[:, None, None] * np.eye(grid.n)
        self.radii = np.linalg.eigvalsh(self.h)
        with np.errstate(divide="ignore"):
            self.kappa = 1 / self.radii
        self.W = u.with_values(np.trace(self.h, axis1=1, axis2=2))
        self.det_h = np.prod(self.radii, axis=1)
        self.volume = grid.integrate(u.values * self.det_h) / (grid.n + 1)
        self.convex = bool(self.radii.min() > 0)
        self.star_shaped = self.convex and u.min() > 0

    @property
    def grid(self):
        return self.u.grid

    @property
    def min_radius(self):
        return float(self.radii.min())


class RadialBundle:
    """Derived geometry of a radial function.

    Parameters
    ----------
    rho : ScalarField

    Attributes
    ----------
    rho : ScalarField
    gradient : numpy.ndarray
    g, h : numpy.ndarray
        First and second fundamental forms in the orthonormal frame, (size, n, n).
    nu : numpy.ndarray
        Outer unit normals, shape (size, n+1).
    u_of_rho : ScalarField
        Support value <X, nu> at the point X = rho x.
    kappa : numpy.ndarray
        Principal curvatures (eigenvalues of h relative to g), ascending.
    X : numpy.ndarray
    volume : float
        Enclosed volume by the radial route, int rho^(n+1) / (n+1).

    Raises
    ------
    ShapeError
        If rho is not strictly positive.
    """

    def __init__(self, rho):
        if rho.min() <= 0:
            raise ShapeError(f"Radial function must be positive, min {rho.min():.3e}")
        grid = rho.grid
        n = grid.n
        r = rho.values
        self.rho = rho
        self.gradient = grid.gradient(r)
        hess = grid.hessian(r)
        outer = self.gradient[:, :, None] * self.gradient[:, None, :]
        eye = np.eye(n)
        root = np.sqrt(r**2 + np.sum(self.gradient**2, axis=1))
        self.g = r[:, None, None] ** 2 * eye + outer
        self.h = (
            r[:, None, None] ** 2 * eye + 2 * outer - r[:, None, None] * hess
        ) / root[:, None, None]
        self.nu = (
            r[:, None] * grid.nodes - grid.tangent_vectors(self.gradient)
        ) / root[:, None]
        self.u_of_rho = rho.with_values(r**2 / root)
        # g = L L^T, kappa = eig(L^-1 h L^-T)
        inv_chol = np.linalg.inv(np.linalg.cholesky(self.g))
        self.kappa = np.linalg.eigvalsh(
            inv_chol @ self.h @ np.swapaxes(inv_chol, 1, 2)
        )
        self.X = r[:, None] * grid.nodes
        self.volume = grid.integrate(r ** (n + 1)) / (n + 1)

    @property
    def grid(self):
        return self.rho.grid

    @property
    def star_shaped(self):
        return bool(self.u_of_rho.min() > 0)


def bundle_from_support(u):
    """Shape bundle of a support function.

    Examples
    --------
    >>> from lp2eigen.sphere_domain import build_grid
    >>> bundle = bundle_from_support(build_grid(2, (8, 16)).sample(lambda x: 2.0))
    >>> bool(np.allclose(bundle.radii, 2.0)), bundle.convex
    (True, True)
    """
    return ShapeBundle(u)


def bundle_from_radial(rho):
    return RadialBundle(rho)


def volume(bundle):
    """Enclosed volume: the support route for a `ShapeBundle`, the radial route for a
    `RadialBundle`."""
    return bundle.volume


def _require_convex(bundle):
    if not bundle.convex:
        raise ShapeError(
            f"Support function is not strictly convex "
            f"(smallest principal radius {bundle.min_radius:.3e})"
        )


def embed_support(u):
    """Points X = u x + grad(u) of the hypersurface with outer normal x.

    Parameters
    ----------
    u : ScalarField or ShapeBundle

    Returns
    -------
    numpy.ndarray
        Shape (size, n+1).

    Raises
    ------
    ShapeError
        If the support function is not strictly convex.
    """
    bundle = u if isinstance(u, ShapeBundle) else ShapeBundle(u)
    _require_convex(bundle)
    grid = bundle.grid
    return bundle.u.values[:, None] * grid.nodes + grid.tangent_vectors(
        bundle.gradient
    )


def _ambient_jacobian(grid, tangent_derivative):
    """Frame-free differential E^T D of shape (size, m, n+1) from frame components D
    of shape (size, m, n)."""
    return np.einsum("ica,iax->icx", tangent_derivative, grid.frame)


def _field_interpolator(grid, table):
    """Off-grid evaluation of a per-node array of shape (size, ...)."""
    shape = table.shape[1:]
    flat = table.reshape(grid.size, -1)
    splines = [grid.interpolator(flat[:, i]) for i in range(flat.shape[1])]

    def evaluate(z):
        return np.column_stack([spline(z) for spline in splines]).reshape(
            (len(z),) + shape
        )

    return evaluate


def _invert_direction_map(grid, vector_map, jacobian_map):
    """Find for every grid direction y the direction z with vector_map(z) parallel to
    y and pointing the same way.

    Newton iteration on the tangent plane at z, started from z = y: the tangent step v
    solves P_y J(z) v = -P_y G(z) in the least-squares sense, with G = vector_map,
    J = jacobian_map its ambient differential and P_y the projection onto y^perp.
    Steps are capped at _INVERSION_MAX_STEP radians.
    """
    y = grid.nodes
    z = y.copy()
    eye = np.eye(grid.n + 1)
    proj_y = eye - y[:, :, None] * y[:, None, :]
    for _ in range(_INVERSION_MAX_ITER):
        g = vector_map(z)
        length = np.linalg.norm(g, axis=1, keepdims=True)
        mismatch = y - g / length
        if np.max(np.linalg.norm(mismatch, axis=1)) <= _INVERSION_TOL:
            return z
        proj_z = eye - z[:, :, None] * z[:, None, :]
        m = proj_y @ jacobian_map(z) @ proj_z
        m_t = np.swapaxes(m, 1, 2)
        # z z^T fixes the normal component of v to zero
        lhs = m_t @ m + z[:, :, None] * z[:, None, :]
        rhs = -m_t @ np.einsum("iab,ib->ia", proj_y, g)[:, :, None]
        step = np.linalg.solve(lhs, rhs)[:, :, 0]
        step_length = np.linalg.norm(step, axis=1, keepdims=True)
        step *= np.minimum(1.0, _INVERSION_MAX_STEP / np.maximum(step_length, 1e-300))
        z = z + step
        z /= np.linalg.norm(z, axis=1, keepdims=True)
    raise ShapeError(
        f"Direction map inversion did not converge in {_INVERSION_MAX_ITER} iterations"
    )


def radial_from_support(u):
    """Radial function of the convex hypersurface with support function `u`.

    The embedded points X(z) are interpolated off-grid and the direction z with
    X(z) / |X(z)| = y is found for each grid direction y, so that rho(y) = |X(z)|.
    The differential of X is E^T h E, h = hess(u) + u I.

    Raises
    ------
    ShapeError
        If `u` is not strictly convex.
    """
    bundle = u if isinstance(u, ShapeBundle) else ShapeBundle(u)
    grid = bundle.grid
    points = embed_support(bundle)
    embedded = _field_interpolator(grid, points)
    differential = np.einsum("iax,iab,iby->ixy", grid.frame, bundle.h, grid.frame)
    jacobian = _field_interpolator(grid, differential)

    z = _invert_direction_map(grid, embedded, jacobian)
    return bundle.u.with_values(np.linalg.norm(embedded(z), axis=1))


def support_from_radial(rho):
    """Support function of the convex hypersurface with radial function `rho`.

    The outer normals nu(z) are interpolated off-grid and the direction z with
    nu(z) = y is found for each grid direction y, so that u(y) = rho(z) <z, y>.

    Raises
    ------
    ShapeError
        If `rho` is not positive or the normal map cannot be inverted.
    """
    bundle = rho if isinstance(rho, RadialBundle) else RadialBundle(rho)
    grid = bundle.grid
    if bundle.kappa.min() <= 0:
        raise ShapeError("Radial function does not describe a strictly convex body")
    normals = _field_interpolator(grid, bundle.nu)
    derivative = np.stack(
        [grid.gradient(bundle.nu[:, c]) for c in range(grid.n + 1)], axis=1
    )
    jacobian = _field_interpolator(grid, _ambient_jacobian(grid, derivative))
    radial = grid.interpolator(bundle.rho.values)

    z = _invert_direction_map(grid, normals, jacobian)
    return bundle.rho.with_values(radial(z) * np.sum(z * grid.nodes, axis=1))


def triangle_mesh(u):
    """Vertices and outward-oriented triangles of the embedded convex surface (S^2).

    Returns
    -------
    vertices : numpy.ndarray
        Shape (size, 3).
    faces : numpy.ndarray
        Zero-based vertex indices, shape (num_faces, 3).
    """
    vertices = embed_support(u)
    if vertices.shape[1] != 3:
        raise ShapeError("Triangle meshes are only available for surfaces in R^3")
    faces = ConvexHull(vertices).simplices.copy()
    a, b, c = (vertices[faces[:, i]] for i in range(3))
    centroid_offset = (a + b + c) / 3 - vertices.mean(axis=0)
    outward = np.sum(np.cross(b - a, c - a) * centroid_offset, axis=1)
    faces[outward < 0] = faces[outward < 0][:, ::-1]
    return vertices, faces


def polyline(u):
    """Closed polyline of the embedded convex curve (S^1), first point repeated."""
    points = embed_support(u)
    if points.shape[1] != 2:
        raise ShapeError("Polylines are only available for curves in R^2")
    return np.vstack([points, points[:1]])
