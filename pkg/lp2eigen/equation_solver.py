"""
Module with the residual, the linearization and the damped Newton solver of the L_p
sigma_k curvature equation in support-function form,

    F(hess(u) + u I) = (f / lambda) ** (1/k) * u ** ((p-1)/k),

F being the Hessian quotient (sigma_n / sigma_{n-k}) ** (1/k) of the principal radii.
For p > k+1 the equation has a unique admissible (positive and strictly convex)
solution for every lambda > 0. Every accepted Newton iterate stays admissible: the
damping is halved until the trial iterate keeps a fixed fraction of the current
admissibility margin and decreases the sup-norm of the residual.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, spsolve

from config.config import TOL_NEWTON, MAX_ITER, CONE_MARGIN, MIN_DAMPING
from .curvature_algebra import (
    in_gamma_k,
    quotient_from_spectrum,
    quotient_F_gradient,
    sigma_k,
)
from .exceptions import AdmissibilityError, ProblemSpecError, SolverError
from .hypersurface import ShapeBundle
from .sphere_domain import ScalarField
from .utils import binomial_ones, sphere_area


class ProblemSpec:
    """Class representing a single instance of the L_p curvature problem.

    Exactly one of `f`, `psi` needs to be given, the other one is derived as its
    reciprocal. A `ProblemSpec` instantiated without exceptions is consistent.

    Parameters
    ----------
    grid : SphereGrid
    k : int
        1 <= k <= n.
    p : float
        p >= k+1; the Newton solver needs p > k+1, p = k+1 is the eigenvalue problem.
    lam : float, default=1.0
        lambda > 0.
    f, psi : ScalarField or array_like, optional
        Positive data on the grid.
    tol_newton : float, optional
        Defaults to ``TOL_NEWTON[n]``.
    max_iter : int, optional
    margin : float, optional
        Fraction of the admissibility margin each Newton step must preserve.

    Raises
    ------
    ProblemSpecError
        If any parameter is out of range or the data are not positive.
    """

    def __init__(
        self,
        grid,
        k,
        p,
        lam=1.0,
        f=None,
        psi=None,
        tol_newton=None,
        max_iter=MAX_ITER,
        margin=CONE_MARGIN,
    ):
        self.grid = grid
        self.n = grid.n
        self.k = int(k)
        self.p = float(p)
        self.lam = float(lam)
        if tol_newton is None:
            tol_newton = TOL_NEWTON[self.n]
        self.tol_newton = float(tol_newton)
        self.max_iter = int(max_iter)
        self.margin = float(margin)

        if not 1 <= self.k <= self.n:
            raise ProblemSpecError(f"1 <= k <= n required, got k={k}, n={self.n}")
        if self.p < self.k + 1:
            raise ProblemSpecError(f"p >= k+1 required, got p={p}, k={k}")
        if not self.lam > 0:
            raise ProblemSpecError(f"lambda must be positive, got {lam}")
        if not 0 < self.margin < 1:
            raise ProblemSpecError(f"Cone margin must lie in (0, 1), got {margin}")
        if (f is None) == (psi is None):
            raise ProblemSpecError("Exactly one of the data functions f, psi required")
        data = f if f is not None else psi
        data = ScalarField(grid, getattr(data, "values", data))
        if data.min() <= 0:
            raise ProblemSpecError(
                f"Data function must be positive, min value {data.min():.3e}"
            )
        reciprocal = data.with_values(1 / data.values)
        self.f, self.psi = (data, reciprocal) if f is not None else (reciprocal, data)

    def __repr__(self):
        return (
            f"ProblemSpec(n={self.n}, k={self.k}, p={self.p}, lam={self.lam}, "
            f"grid={self.grid.resolution})"
        )

    @property
    def exponent(self):
        """Power (p-1)/k of u on the right-hand side."""
        return (self.p - 1) / self.k

    @property
    def gap(self):
        """p - 1 - k, the dilation weight of the equation."""
        return self.p - 1 - self.k

    @property
    def sigma_ones(self):
        return binomial_ones(self.n, self.k)

    @property
    def f_mean(self):
        return self.grid.integrate(self.f.values) / sphere_area(self.n)

    def coefficient(self):
        """(f / lambda) ** (1/k), node-wise."""
        return (self.f.values / self.lam) ** (1 / self.k)

    def replace(self, **kwargs):
        """New spec with some of the parameters changed."""
        params = {
            "grid": self.grid,
            "k": self.k,
            "p": self.p,
            "lam": self.lam,
            "f": self.f,
            "tol_newton": self.tol_newton,
            "max_iter": self.max_iter,
            "margin": self.margin,
        }
        if "psi" in kwargs:
            params.pop("f")
        params.update(kwargs)
        return ProblemSpec(**params)


@dataclass
class AdmissibilityReport:
    positive: bool
    convex: bool
    gamma_k: bool
    worst_margin: float
    worst_node: int

    @property
    def admissible(self):
        return self.positive and self.convex


@dataclass
class SolveReport:
    u: ScalarField
    iterations: int
    final_residual_sup: float
    newton_path: list = field(default_factory=list)
    admissible_throughout: bool = True
    sigma_min: float = None
    min_radius: float = None

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "final_residual_sup": self.final_residual_sup,
            "newton_path": [list(step) for step in self.newton_path],
            "admissible_throughout": self.admissible_throughout,
            "sigma_min": self.sigma_min,
            "min_radius": self.min_radius,
        }


def _as_field(u, spec):
    return u if isinstance(u, ScalarField) else ScalarField(spec.grid, u)


def _admissibility(bundle, k):
    u = bundle.u.values
    radii_min = bundle.radii.min(axis=1)
    node_margin = np.minimum(u, radii_min)
    worst_node = int(np.argmin(node_margin))
    convex = bool(radii_min.min() > 0)
    with np.errstate(invalid="ignore"):
        gamma = bool(np.all(radii_min != 0) and np.all(in_gamma_k(bundle.kappa, k)))
    return AdmissibilityReport(
        positive=bool(u.min() > 0),
        convex=convex,
        gamma_k=gamma,
        worst_margin=float(node_margin[worst_node]),
        worst_node=worst_node,
    )


def admissibility(u, spec):
    """Positivity, strict convexity and Garding-cone membership of a support function.

    The worst margin is the smallest of all the node values of u and of all the
    principal radii; it is positive exactly for admissible support functions.

    Examples
    --------
    >>> from lp2eigen.sphere_domain import build_grid
    >>> grid = build_grid(2, (8, 16))
    >>> spec = ProblemSpec(grid, k=1, p=3, f=np.ones(grid.size))
    >>> report = admissibility(grid.sample(lambda x: 1.0), spec)
    >>> report.admissible, round(report.worst_margin, 12)
    (True, 1.0)
    """
    return _admissibility(ShapeBundle(_as_field(u, spec)), spec.k)


def _require_admissible(bundle, spec):
    report = _admissibility(bundle, spec.k)
    if not report.admissible:
        raise AdmissibilityError(
            f"Support function not admissible at node {report.worst_node} "
            f"(margin {report.worst_margin:.3e})",
            node=report.worst_node,
            value=report.worst_margin,
        )
    return report


def _residual_values(bundle, spec):
    u = bundle.u.values
    return quotient_from_spectrum(bundle.radii, spec.k) - spec.coefficient() * (
        u**spec.exponent
    )


def residual(u, spec):
    """Node-wise residual F(h) - (f / lambda) ** (1/k) u ** ((p-1)/k).

    Raises
    ------
    AdmissibilityError
        If u is not positive and strictly convex; carries the worst node.
    """
    bundle = ShapeBundle(_as_field(u, spec))
    _require_admissible(bundle, spec)
    return bundle.u.with_values(_residual_values(bundle, spec))


def primal_residual(bundle, spec):
    """Residual <X, nu> ** (p-1) sigma_k(kappa) - lambda / f(nu) of a radial bundle.

    The data f are composed with the normal map by off-grid interpolation.

    Raises
    ------
    AdmissibilityError
        If the hypersurface is not strictly star-shaped or kappa leaves the Garding
        cone at some node.
    """
    support = bundle.u_of_rho.values
    if support.min() <= 0:
        node = int(np.argmin(support))
        raise AdmissibilityError(
            f"Hypersurface not strictly star-shaped at node {node}",
            node=node,
            value=float(support[node]),
        )
    inside = in_gamma_k(bundle.kappa, spec.k)
    if not np.all(inside):
        node = int(np.argmin(inside))
        raise AdmissibilityError(
            f"Principal curvatures leave the Garding cone at node {node}", node=node
        )
    f_of_nu = spec.grid.interpolator(spec.f.values)(bundle.nu)
    values = support ** (spec.p - 1) * sigma_k(bundle.kappa, spec.k)
    values = values - spec.lam / f_of_nu
    return bundle.rho.with_values(values)


def _right_hand_side_derivative(bundle, spec):
    u = bundle.u.values
    return spec.exponent * spec.coefficient() * u ** (spec.exponent - 1)


def jacobian_apply(u, du, spec):
    """Linearization of the residual at u applied to the direction du.

    L[du] = F^{ij}(h) (hess(du) + du I)_{ij} - a (f / lambda)^(1/k) u^(a-1) du,

    with a = (p-1)/k.
    """
    bundle = ShapeBundle(_as_field(u, spec))
    _require_admissible(bundle, spec)
    grid = spec.grid
    du = np.asarray(getattr(du, "values", du), dtype=float)
    h_du = grid.hessian(du) + du[:, None, None] * np.eye(grid.n)
    f_ij = quotient_F_gradient(bundle.h, spec.k)
    values = np.einsum("aij,aij->a", f_ij, h_du) - _right_hand_side_derivative(
        bundle, spec
    ) * du
    return bundle.u.with_values(values)


def _assemble(bundle, spec):
    grid = spec.grid
    f_ij = quotient_F_gradient(bundle.h, spec.k)
    diagonal = np.trace(f_ij, axis1=1, axis2=2) - _right_hand_side_derivative(
        bundle, spec
    )
    jacobian = sparse.diags(diagonal)
    for i in range(grid.n):
        for j in range(i, grid.n):
            weight = f_ij[:, i, j] * (1 if i == j else 2)
            jacobian = jacobian + sparse.diags(weight) @ grid.hessian_operator(i, j)
    return jacobian.tocsr()


def assemble_jacobian(u, spec):
    """Sparse matrix of `jacobian_apply` at u, in the stencil sparsity pattern."""
    bundle = ShapeBundle(_as_field(u, spec))
    _require_admissible(bundle, spec)
    return _assemble(bundle, spec)


def estimate_sigma_min(jacobian, tol=1e-8):
    """Smallest singular value of a sparse matrix.

    The smallest eigenvalue of J^T J by shift-invert ARPACK at zero. Returns 0 for an
    exactly singular matrix.
    """
    normal = sparse.csc_matrix(jacobian.T @ jacobian)
    try:
        eigenvalues = eigsh(normal, k=1, sigma=0, which="LM", tol=tol)[0]
    except ArpackNoConvergence as e:
        eigenvalues = e.eigenvalues
        if len(eigenvalues) == 0:
            return float("nan")
    except RuntimeError:
        return 0.0
    return float(np.sqrt(max(float(eigenvalues.min()), 0.0)))


def sphere_guess(spec):
    """Round sphere u = r balancing the equation with f replaced by its mean.

    r^(p-1-k) sigma_k(1, ..., 1) = lambda / mean(f).

    Raises
    ------
    ProblemSpecError
        If p <= k+1 (no dilation fixes the balance).

    Examples
    --------
    >>> from lp2eigen.sphere_domain import build_grid
    >>> grid = build_grid(2, (8, 16))
    >>> spec = ProblemSpec(grid, k=1, p=4, lam=1, f=np.full(grid.size, 4.0))
    >>> guess = sphere_guess(spec)
    >>> round(guess.max(), 5)
    0.35355
    """
    if spec.gap <= 0:
        raise ProblemSpecError(f"Round-sphere guess requires p > k+1, got p={spec.p}")
    radius = (spec.lam / (spec.f_mean * spec.sigma_ones)) ** (1 / spec.gap)
    return ScalarField(spec.grid, np.full(spec.grid.size, radius))


def newton_solve(spec, u0=None, verbose=False):
    """Solve the L_p curvature equation by the admissibility-safeguarded damped Newton.

    Parameters
    ----------
    spec : ProblemSpec
        Needs p > k+1.
    u0 : ScalarField or array_like, optional
        Admissible initial guess, defaults to `sphere_guess`.
    verbose : bool, default=False
        If True, one line per Newton iteration is printed.

    Returns
    -------
    SolveReport

    Raises
    ------
    ProblemSpecError
        If p <= k+1.
    AdmissibilityError
        If the initial guess is not admissible.
    SolverError
        If the iteration limit is exceeded, the line search fails (damping below
        MIN_DAMPING) or the Jacobian is singular. Carries the best iterate.
    """
    if spec.gap <= 0:
        raise ProblemSpecError(f"Newton solver requires p > k+1, got p={spec.p}")
    u = sphere_guess(spec) if u0 is None else _as_field(u0, spec)
    bundle = ShapeBundle(u)
    admissible = _require_admissible(bundle, spec)
    res = _residual_values(bundle, spec)
    sup = float(np.max(np.abs(res)))
    path = []

    def partial_report():
        return SolveReport(
            u=u, iterations=len(path), final_residual_sup=sup, newton_path=path
        )

    if verbose:
        print(f"Newton iteration  0 - residual (sup): {sup:.3e}")
    while sup > spec.tol_newton:
        if len(path) >= spec.max_iter:
            raise SolverError(
                f"Newton solver did not converge in {spec.max_iter} iterations "
                f"(residual {sup:.3e})",
                best=u,
                report=partial_report(),
            )
        delta = spsolve(_assemble(bundle, spec).tocsc(), -res)
        if not np.all(np.isfinite(delta)):
            raise SolverError(
                "Singular Jacobian in the Newton step", best=u, report=partial_report()
            )
        damping = 1.0
        while True:
            trial = u.with_values(u.values + damping * delta)
            trial_bundle = ShapeBundle(trial)
            trial_admissible = _admissibility(trial_bundle, spec.k)
            if (
                trial_admissible.admissible
                and trial_admissible.worst_margin
                >= spec.margin * admissible.worst_margin
            ):
                trial_res = _residual_values(trial_bundle, spec)
                trial_sup = float(np.max(np.abs(trial_res)))
                if trial_sup < sup:
                    break
            damping /= 2
            if damping < MIN_DAMPING:
                raise SolverError(
                    f"Newton line search failed (residual {sup:.3e})",
                    best=u,
                    report=partial_report(),
                )
        u, bundle, admissible = trial, trial_bundle, trial_admissible
        res, sup = trial_res, trial_sup
        path.append((len(path) + 1, damping, sup))
        if verbose:
            print(
                f"Newton iteration {len(path):2d} - residual (sup): {sup:.3e}"
                f" - damping: {damping:.3e}"
            )

    report = partial_report()
    report.sigma_min = estimate_sigma_min(_assemble(bundle, spec))
    report.min_radius = bundle.min_radius
    if verbose:
        print(f"Newton solver converged after {report.iterations} iterations.")
    return report
