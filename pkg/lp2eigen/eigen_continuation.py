"""
Module computing the eigenvalue and the eigen-hypersurface of the prescribed curvature
problem

    <X, nu> ** k * sigma_k(kappa) = lambda * psi(nu),

which in support form is the L_p equation at the scale-invariant exponent p = k+1,
with f = 1/psi. The eigenvalue is reached by continuation p -> k+1 from above: the
uniquely solvable problems at p_j > k+1 are solved with lambda = 1, their solutions are
normalized to unit volume, and

    lambda_p = V(u_p) ** (-(p-k-1)/(n+1))

is the eigenvalue of the normalized hypersurface at p. The eigenvalue lambda_0 and the
limit shape u_0 are extrapolated linearly in p-k-1. A bordered Newton solve on (u,
lambda) directly at p = k+1 with the volume constraint V(u) = 1 serves as a
cross-check.

As p -> k+1 the unit-lambda solutions degenerate in size (their volume behaves like
lambda_ref ** (-(n+1)/(p-k-1))). The inner solves are therefore carried out at the
reference value lambda_ref = mean(f) sigma_k(1, ..., 1), whose round guess is the unit
sphere, and the unit-lambda quantities follow from the exact dilation law
lambda(s u) = lambda(u) s ** (p-1-k).
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.linalg import spsolve
from tqdm import tqdm

from config.config import (
    SCHEDULE_BASE,
    SCHEDULE_STEPS,
    EXTRAPOLATION_POINTS,
    MIN_DAMPING,
)
from .curvature_algebra import elementary_symmetric
from .equation_solver import (
    newton_solve,
    sphere_guess,
    _admissibility,
    _assemble,
    _require_admissible,
    _residual_values,
)
from .exceptions import (
    ContinuationError,
    ProblemSpecError,
    ShapeError,
    SolverError,
)
from .hypersurface import ShapeBundle
from .sphere_domain import is_even, symmetry_defect
from .utils import unit_ball_volume

# offset of the smallest admissible barrier radius above 1
BARRIER_EPS = 1e-6
# verification tolerance of the extrapolated pair, in units of the grid error
VERIFICATION_FACTOR = 50


@dataclass
class ContinuationSchedule:
    """Decreasing exponents p_j > k+1 approaching k+1.

    Raises
    ------
    ProblemSpecError
        If the exponents are not strictly decreasing or not all above k+1.
    """

    k: int
    p_list: list
    warm_start: bool = True

    def __post_init__(self):
        self.p_list = [float(p) for p in self.p_list]
        if not self.p_list:
            raise ProblemSpecError("Empty continuation schedule")
        if any(p <= self.k + 1 for p in self.p_list):
            raise ProblemSpecError(f"All the exponents must exceed k+1={self.k + 1}")
        if any(b >= a for a, b in zip(self.p_list, self.p_list[1:])):
            raise ProblemSpecError("Continuation exponents must be strictly decreasing")

    @classmethod
    def geometric(cls, k, base=SCHEDULE_BASE, steps=SCHEDULE_STEPS, warm_start=True):
        """Schedule p_j = k + 1 + base ** (-j), j = 1..steps.

        Examples
        --------
        >>> ContinuationSchedule.geometric(1, base=2, steps=3).p_list
        [2.5, 2.25, 2.125]
        """
        if base <= 1:
            raise ProblemSpecError(f"Schedule base must exceed 1, got {base}")
        p_list = [k + 1 + base ** (-j) for j in range(1, steps + 1)]
        return cls(k=k, p_list=p_list, warm_start=warm_start)

    @property
    def gaps(self):
        return np.array(self.p_list) - self.k - 1


@dataclass
class EigenReport:
    """Results of the continuation towards the eigenvalue problem."""

    p_list: list = field(default_factory=list)
    lambda_list: list = field(default_factory=list)
    log_volume_list: list = field(default_factory=list)
    residual_list: list = field(default_factory=list)
    symmetry_defect_list: list = field(default_factory=list)
    min_radius_list: list = field(default_factory=list)
    normalized: list = field(default_factory=list)
    solve_reports: list = field(default_factory=list)
    lambda0: float = None
    u0: object = None
    symmetry_defect: float = None
    final_residual: float = None
    grid_error: float = None
    verified: bool = False
    even_data: bool = True
    notes: list = field(default_factory=list)
    bound_checks: list = field(default_factory=list)

    def lambda_table(self):
        """Per-step table (p, lambda_p, V, log_V, residual, symmetry_defect)."""
        return pd.DataFrame(
            {
                "p": self.p_list,
                "lambda_p": self.lambda_list,
                "V": np.exp(self.log_volume_list),
                "log_V": self.log_volume_list,
                "residual": self.residual_list,
                "symmetry_defect": self.symmetry_defect_list,
            }
        )

    def to_dict(self):
        return {
            "p_list": self.p_list,
            "lambda_list": self.lambda_list,
            "log_volume_list": self.log_volume_list,
            "residual_list": self.residual_list,
            "symmetry_defect_list": self.symmetry_defect_list,
            "min_radius_list": self.min_radius_list,
            "lambda0": self.lambda0,
            "symmetry_defect": self.symmetry_defect,
            "final_residual": self.final_residual,
            "grid_error": self.grid_error,
            "verified": self.verified,
            "even_data": self.even_data,
            "notes": self.notes,
            "solve_reports": [report.to_dict() for report in self.solve_reports],
        }


@dataclass
class EigenSolution:
    u: object
    lam: float
    iterations: int
    residual_sup: float

    def __iter__(self):
        return iter((self.u, self.lam))


def normalize_by_volume(u):
    """Rescale a support function to unit enclosed volume.

    Raises
    ------
    ShapeError
        If the enclosed volume is not positive.

    Examples
    --------
    >>> from lp2eigen.sphere_domain import build_grid
    >>> u = normalize_by_volume(build_grid(2, (8, 16)).sample(lambda x: 2.0))
    >>> round(u.max(), 10) == round((3 / (4 * np.pi)) ** (1 / 3), 10)
    True
    """
    n = u.grid.n
    for _ in range(2):
        volume = ShapeBundle(u).volume
        if volume <= 0:
            raise ShapeError(f"Cannot normalize a non-positive volume {volume:.3e}")
        if abs(volume - 1) <= 1e-14:
            break
        u = u.with_values(u.values / volume ** (1 / (n + 1)))
    return u


def lambda_from_volume(volume, p, k, n):
    """Eigenvalue of the volume-normalized unit-lambda solution at p.

    Examples
    --------
    >>> round(lambda_from_volume((4 * np.pi / 3) / 8, p=3, k=1, n=2), 4)
    1.2407
    """
    if volume <= 0:
        raise ShapeError(f"Volume must be positive, got {volume}")
    return volume ** (-(p - k - 1) / (n + 1))


def barrier_radius(spec):
    """Radius r > 1 of the round outer barrier: lambda max(psi) r^(1-p) <= C r^(-k).

    Examples
    --------
    >>> from lp2eigen.equation_solver import ProblemSpec
    >>> from lp2eigen.sphere_domain import build_grid
    >>> grid = build_grid(2, (8, 16))
    >>> barrier_radius(ProblemSpec(grid, k=1, p=3, lam=8, psi=np.ones(grid.size)))
    4.0
    """
    if spec.gap <= 0:
        raise ProblemSpecError(f"Barrier radius requires p > k+1, got p={spec.p}")
    radius = (spec.lam * spec.psi.max() / spec.sigma_ones) ** (1 / spec.gap)
    return float(max(1 + BARRIER_EPS, radius))


def residual_eigen(u, lam, spec):
    """Node-wise residual u^k sigma_k(kappa) - lambda psi of the eigenvalue equation.

    sigma_k of the curvatures is evaluated on the principal radii as
    sigma_{n-k}(mu) / sigma_n(mu).
    """
    bundle = ShapeBundle(u)
    _require_admissible(bundle, spec)
    n, k = spec.n, spec.k
    sigma = elementary_symmetric(bundle.radii)
    curvature = sigma[:, n - k] / sigma[:, n]
    return u.with_values(u.values**k * curvature - lam * spec.psi.values)


def _extrapolate(gaps, values):
    """Intercept at gap 0 of the least-squares line through (gaps, values)."""
    return np.polyfit(gaps, values, 1)[-1]


def continuation_eigen(spec, schedule=None, progress=True):
    """Eigenvalue and normalized eigen-hypersurface by continuation p -> k+1.

    Parameters
    ----------
    spec : ProblemSpec
        Problem at p = k+1 with the data psi; its lambda is not used.
    schedule : ContinuationSchedule, optional
        Defaults to ``ContinuationSchedule.geometric(spec.k)``.
    progress : bool, default=True
        Show a progress bar over the schedule.

    Returns
    -------
    EigenReport

    Raises
    ------
    ContinuationError
        If any inner solve fails; carries the partial report.
    """
    if schedule is None:
        schedule = ContinuationSchedule.geometric(spec.k)
    n, k = spec.n, spec.k
    report = EigenReport(grid_error=spec.grid.grid_error, even_data=is_even(spec.psi))
    if not report.even_data:
        report.notes.append(
            "psi is not even: existence of the eigen-hypersurface is not guaranteed, "
            "only uniqueness diagnostics apply"
        )
    lam_ref = spec.f_mean * spec.sigma_ones
    ball_scale = unit_ball_volume(n) ** (1 / (n + 1))

    previous = None
    for p in tqdm(schedule.p_list, desc=f"eigen n={n} k={k}", disable=not progress):
        spec_p = spec.replace(p=p, lam=lam_ref)
        if schedule.warm_start and previous is not None:
            u_init = previous.with_values(previous.values * ball_scale)
        else:
            u_init = sphere_guess(spec_p)
        try:
            solve_report = newton_solve(spec_p, u_init)
        except SolverError as e:
            raise ContinuationError(
                f"Inner solve failed at p={p}: {e}", report=report
            ) from e
        v = solve_report.u
        gap = spec_p.gap
        log_volume_v = np.log(ShapeBundle(v).volume)
        normalized = normalize_by_volume(v)
        report.p_list.append(p)
        report.lambda_list.append(
            float(lam_ref * np.exp(-gap / (n + 1) * log_volume_v))
        )
        report.log_volume_list.append(
            float(log_volume_v - (n + 1) / gap * np.log(lam_ref))
        )
        report.residual_list.append(solve_report.final_residual_sup)
        report.symmetry_defect_list.append(symmetry_defect(normalized))
        report.min_radius_list.append(ShapeBundle(normalized).min_radius)
        report.normalized.append(normalized)
        report.solve_reports.append(solve_report)
        previous = normalized

    num_fit = min(EXTRAPOLATION_POINTS, len(report.p_list))
    gaps = np.array(report.p_list[-num_fit:]) - k - 1
    if num_fit == 1:
        report.lambda0 = report.lambda_list[-1]
        u0_values = report.normalized[-1].values
    else:
        report.lambda0 = float(_extrapolate(gaps, report.lambda_list[-num_fit:]))
        stacked = np.array([u.values for u in report.normalized[-num_fit:]])
        u0_values = _extrapolate(gaps, stacked)
    report.u0 = normalize_by_volume(report.normalized[-1].with_values(u0_values))
    report.symmetry_defect = symmetry_defect(report.u0)
    eigen_spec = spec.replace(p=k + 1)
    report.final_residual = float(
        np.max(np.abs(residual_eigen(report.u0, report.lambda0, eigen_spec).values))
    )
    report.verified = report.final_residual <= VERIFICATION_FACTOR * report.grid_error
    return report


def volume_gradient(bundle):
    """Gradient of the discrete volume int u det(h) / (n+1) with respect to u."""
    grid = bundle.grid
    n = grid.n
    u = bundle.u.values
    weighted = grid.weights * u
    cofactor = bundle.det_h[:, None, None] * np.linalg.inv(bundle.h)
    gradient = grid.weights * bundle.det_h + weighted * np.trace(
        cofactor, axis1=1, axis2=2
    )
    for i in range(n):
        for j in range(i, n):
            factor = 1 if i == j else 2
            gradient += factor * (
                grid.hessian_operator(i, j).T @ (weighted * cofactor[:, i, j])
            )
    return gradient / (n + 1)


def direct_eigen_solve(spec, u_init=None, lambda_init=None, verbose=False):
    """Bordered Newton solve of the eigenvalue problem for the pair (u, lambda).

    Unknowns u and lambda, equations: the L_p residual at p = k+1 and V(u) = 1.

    Parameters
    ----------
    spec : ProblemSpec
        Problem with the data psi; p is forced to k+1.
    u_init : ScalarField, optional
        Admissible initial guess, defaults to the round sphere of unit volume.
    lambda_init : float, optional
        Defaults to sigma_k(1, ..., 1) / mean(psi).
    verbose : bool, default=False

    Returns
    -------
    EigenSolution
        Unpacks as ``u, lam``.

    Raises
    ------
    SolverError
        If the bordered system is singular, the line search fails or the iteration
        limit is exceeded.
    """
    spec = spec.replace(p=spec.k + 1)
    grid = spec.grid
    n = grid.n
    if u_init is None:
        u_init = grid.field(np.full(grid.size, unit_ball_volume(n) ** (-1 / (n + 1))))
    if lambda_init is None:
        lambda_init = spec.sigma_ones / (
            grid.integrate(spec.psi.values) / grid.weights.sum()
        )
    u, lam = u_init, float(lambda_init)
    bundle = ShapeBundle(u)
    admissible = _require_admissible(bundle, spec)

    def evaluate(bundle, lam):
        res = _residual_values(bundle, spec.replace(lam=lam))
        constraint = bundle.volume - 1
        return res, constraint, max(float(np.max(np.abs(res))), abs(constraint))

    res, constraint, sup = evaluate(bundle, lam)
    iterations = 0
    while sup > spec.tol_newton:
        if iterations >= spec.max_iter:
            raise SolverError(
                f"Bordered Newton did not converge in {spec.max_iter} iterations",
                best=(u, lam),
            )
        spec_lam = spec.replace(lam=lam)
        d_lambda = spec_lam.coefficient() * u.values**spec.exponent / (spec.k * lam)
        bordered = sparse.bmat(
            [
                [_assemble(bundle, spec_lam), d_lambda[:, None]],
                [volume_gradient(bundle)[None, :], None],
            ],
            format="csc",
        )
        step = spsolve(bordered, -np.append(res, constraint))
        if not np.all(np.isfinite(step)):
            raise SolverError("Singular bordered system", best=(u, lam))
        damping = 1.0
        while True:
            trial_lam = lam + damping * step[-1]
            if trial_lam > 0:
                trial = u.with_values(u.values + damping * step[:-1])
                trial_bundle = ShapeBundle(trial)
                trial_admissible = _admissibility(trial_bundle, spec.k)
                if (
                    trial_admissible.admissible
                    and trial_admissible.worst_margin
                    >= spec.margin * admissible.worst_margin
                ):
                    trial_eval = evaluate(trial_bundle, trial_lam)
                    if trial_eval[-1] < sup:
                        break
            damping /= 2
            if damping < MIN_DAMPING:
                raise SolverError("Bordered Newton line search failed", best=(u, lam))
        u, lam, bundle, admissible = trial, trial_lam, trial_bundle, trial_admissible
        res, constraint, sup = trial_eval
        iterations += 1
        if verbose:
            print(
                f"Bordered Newton iteration {iterations:2d} - residual (sup): "
                f"{sup:.3e} - lambda: {lam:.10f}"
            )
    return EigenSolution(u=u, lam=lam, iterations=iterations, residual_sup=sup)
