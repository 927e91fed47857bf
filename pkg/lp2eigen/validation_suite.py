"""
Module with executable versions of the a-priori estimates of the L_p curvature
problem and of its eigenvalue problem, evaluated on solver outputs.

Every checker returns `BoundReport` instances of the form lhs <= rhs. The checks take
the solved equation with a general lambda, which is the equation with lambda = 1 and
the data f / lambda, so all the estimates are evaluated with f / lambda in place of f.
Explicit constants are derived along the estimates' proofs with the normalized-mean
(Maclaurin) constants; any correction against the literal form of an estimate is
recorded in the report notes, never applied silently.
"""

from dataclasses import dataclass, asdict

import numpy as np

from config.config import BOUND_RTOL, LAMBDA_BRACKET_TOL, MULTI_START, COMPARE_BASE
from .eigen_continuation import (
    ContinuationSchedule,
    EigenReport,
    continuation_eigen,
    direct_eigen_solve,
)
from .equation_solver import SolveReport, newton_solve, sphere_guess
from .hypersurface import ShapeBundle
from .sphere_domain import is_even, symmetry_defect
from .utils import unit_ball_volume

# acceptance tolerances of the uniqueness checks
MULTI_START_TOL = 1e-6
SCHEDULE_TOL = 2e-3
CROSS_METHOD_TOL = 1e-4
SYMMETRY_TOL = {"solve": 1e-6, "eigen": 1e-4}


@dataclass
class BoundReport:
    """Single inequality lhs <= rhs, satisfied up to a relative tolerance."""

    name: str
    lhs: float
    rhs: float
    satisfied: bool = None
    slack: float = None
    notes: str = ""

    def __post_init__(self):
        self.lhs, self.rhs = float(self.lhs), float(self.rhs)
        self.satisfied = bool(self.lhs <= self.rhs + BOUND_RTOL * abs(self.rhs))
        self.slack = self.rhs - self.lhs

    def to_dict(self):
        return asdict(self)


def _solution_field(solution):
    return solution.u if isinstance(solution, SolveReport) else solution


def _scaled_data(spec):
    """The data f / lambda of the equivalent unit-lambda equation."""
    return spec.f.values / spec.lam


def check_volume_ratio(solution, spec):
    """Two-sided volume bound of the solution, with the binomial correction.

    1 / (C max f) <= (V / V(B_1)) ** ((p-k-1)/(n+1)) <= 1 / (C min f),
    C = sigma_k(1, ..., 1). The notes record whether the uncorrected bounds (C = 1)
    hold.

    Returns
    -------
    list[BoundReport]
        Lower and upper bound.
    """
    u = _solution_field(solution)
    n = spec.n
    data = _scaled_data(spec)
    ratio = ShapeBundle(u).volume / unit_ball_volume(n)
    power = ratio ** (spec.gap / (n + 1))
    lower = 1 / (spec.sigma_ones * data.max())
    upper = 1 / (spec.sigma_ones * data.min())
    literal_lower, literal_upper = 1 / data.max(), 1 / data.min()
    literal_holds = (
        literal_lower * (1 - BOUND_RTOL) <= power <= literal_upper * (1 + BOUND_RTOL)
    )
    notes = (
        f"bounds corrected by the factor C = sigma_k(1,...,1) = {spec.sigma_ones}; "
        f"uncorrected bounds [{literal_lower:.10g}, {literal_upper:.10g}] "
        f"{'hold' if literal_holds else 'fail'} for the value {power:.10g}"
    )
    return [
        BoundReport("volume_ratio_lower", lower, power, notes=notes),
        BoundReport("volume_ratio_upper", power, upper, notes=notes),
    ]


def half_sphere_moment(grid, x0, exponent):
    """Quadrature of <x0, x> ** exponent over the half-sphere <x0, x> >= 0.

    Examples
    --------
    >>> from lp2eigen.sphere_domain import build_grid
    >>> grid = build_grid(2, (48, 96))
    >>> moment = half_sphere_moment(grid, np.array([0.0, 0.0, 1.0]), 3.0)
    >>> bool(abs(moment - 2 * np.pi / 4) < 1e-2)
    True
    """
    cosine = grid.nodes @ np.asarray(x0, dtype=float)
    mask = cosine >= 0
    return float(np.sum(grid.weights[mask] * cosine[mask] ** exponent))


def check_max_u_chain(solution, spec):
    """The chain of inequalities bounding max u by the volume.

    With p* = 1 + (p-1) n / k, c = C ** (-n/k) and x0 the node of max u:

    - int u^p* f^(n/k) <= c (n+1) V  (Maclaurin lower bound of det h),
    - u(x0)^p* I(p*) <= int u^p*,  I(p*) the half-sphere moment at x0,
    - max u <= ((n+1) c V / (min f)^(n/k) / I(p*)) ** (1/p*).

    Returns
    -------
    list[BoundReport]
    """
    u = _solution_field(solution)
    grid = spec.grid
    n, k = spec.n, spec.k
    data = _scaled_data(spec)
    bundle = ShapeBundle(u)
    p_star = 1 + (spec.p - 1) * n / k
    c_chain = spec.sigma_ones ** (-n / k)
    node = int(np.argmax(u.values))
    moment = half_sphere_moment(grid, grid.nodes[node], p_star)
    int_u_p = grid.integrate(u.values**p_star)
    notes = f"p* = {p_star:.10g}, c = C^(-n/k) = {c_chain:.10g}, I(p*) = {moment:.10g}"
    bound = ((n + 1) * c_chain * bundle.volume / data.min() ** (n / k) / moment) ** (
        1 / p_star
    )
    return [
        BoundReport(
            "volume_lower_chain",
            grid.integrate(u.values**p_star * data ** (n / k)),
            c_chain * (n + 1) * bundle.volume,
            notes=notes,
        ),
        BoundReport(
            "half_sphere_moment",
            u.values[node] ** p_star * moment,
            int_u_p,
            notes=notes,
        ),
        BoundReport("max_u", u.max(), bound, notes=notes),
    ]


def check_gradient_bound(solution):
    """sup |grad u| <= max u, up to a relative allowance of 10 grid errors."""
    u = _solution_field(solution)
    gradient = np.linalg.norm(u.grid.gradient(u.values), axis=1)
    return BoundReport(
        "gradient",
        gradient.max(),
        u.max() * (1 + 10 * u.grid.grid_error),
        notes=f"relative grid allowance 10 * {u.grid.grid_error:.3e}",
    )


def c11_norm(values, grid):
    """Grid surrogate of the C^{1,1} norm: the largest of sup |g|, sup |grad g| and
    the sup of the spectral norm of hess g."""
    gradient = np.linalg.norm(grid.gradient(values), axis=1)
    hessian = np.abs(np.linalg.eigvalsh(grid.hessian(values))).max(axis=1)
    return float(max(np.abs(values).max(), gradient.max(), hessian.max()))


def check_W_bound(solution, spec):
    """sup W <= (2n(p-1)/k) (max u) ** ((p-1)/k) N(f ** (1/k)), N the C^{1,1} norm.

    The notes record the statement form with N(f) in place of N(f^(1/k)).
    """
    u = _solution_field(solution)
    n, k = spec.n, spec.k
    data = _scaled_data(spec)
    factor = 2 * n * (spec.p - 1) / k * u.max() ** spec.exponent
    rhs = factor * c11_norm(data ** (1 / k), spec.grid)
    literal = factor * c11_norm(data, spec.grid)
    sup_w = ShapeBundle(u).W.max()
    notes = (
        f"norm of f^(1/k) used; with the norm of f the bound is {literal:.10g} "
        f"({'holds' if sup_w <= literal * (1 + BOUND_RTOL) else 'fails'})"
    )
    return BoundReport("W", sup_w, rhs, notes=notes)


def lambda_bracket(p, spec):
    """Bounds on lambda_p implied by the corrected volume bounds and f = 1/psi."""
    n = spec.n
    scale = unit_ball_volume(n) ** (-(p - spec.k - 1) / (n + 1))
    return (
        spec.sigma_ones / spec.psi.max() * scale,
        spec.sigma_ones / spec.psi.min() * scale,
    )


def check_lambda_bounds(eigen_report, spec):
    """Every lambda_p of the continuation within its bracket, relative tolerance.

    Returns
    -------
    list[BoundReport]
        Worst ratios lower_j / lambda_j and lambda_j / upper_j, each bounded by 1.
    """
    lower_ratios, upper_ratios = [], []
    for p, lam in zip(eigen_report.p_list, eigen_report.lambda_list):
        lower, upper = lambda_bracket(p, spec)
        lower_ratios.append(lower * (1 - LAMBDA_BRACKET_TOL) / lam)
        upper_ratios.append(lam / (upper * (1 + LAMBDA_BRACKET_TOL)))
    lower0, upper0 = lambda_bracket(spec.k + 1, spec)
    notes = (
        f"relative tolerance {LAMBDA_BRACKET_TOL}; limit bracket "
        f"[{lower0:.10g}, {upper0:.10g}], lambda0 = {eigen_report.lambda0:.10g}"
    )
    return [
        BoundReport("lambda_lower", max(lower_ratios), 1.0, notes=notes),
        BoundReport("lambda_upper", max(upper_ratios), 1.0, notes=notes),
    ]


def multi_start_guesses(spec, num_starts=MULTI_START, seed=0):
    """Distinct admissible initial guesses around the round-sphere guess."""
    rng = np.random.default_rng(seed)
    base = sphere_guess(spec).values
    nodes = spec.grid.nodes
    guesses = []
    for i in range(num_starts):
        axis = rng.standard_normal(spec.n + 1)
        axis /= np.linalg.norm(axis)
        projection = nodes @ axis
        if i % 3 == 0:
            values = 1.4 * base
        elif i % 3 == 1:
            values = base * (1 + 0.1 * projection**2)
        else:
            values = base * (0.8 + 0.1 * projection)
        guesses.append(spec.grid.field(values))
    return guesses


def _convexity_report(fields, name="convexity"):
    min_radius = min(ShapeBundle(u).min_radius for u in fields)
    return BoundReport(name, 0.0, min_radius, notes="smallest principal radius")


def _symmetry_report(u, data, mode):
    if not is_even(data):
        return BoundReport(
            "symmetry", 0.0, 0.0, notes="skipped: data are not even"
        )
    return BoundReport("symmetry", symmetry_defect(u), SYMMETRY_TOL[mode])


def check_solution_properties(
    target, spec, num_starts=MULTI_START, compare_base=COMPARE_BASE, seed=0
):
    """Convexity, symmetry and uniqueness checks of a solution or an eigen report.

    For a solution of the L_p equation: convexity margin, symmetry defect (even data
    only) and agreement of Newton solves from `num_starts` distinct starts. For an
    `EigenReport`: convexity margin over all the normalized iterates, symmetry defect
    of the limit shape and the agreement of lambda0 with a continuation along the
    schedule with base `compare_base`.

    Returns
    -------
    list[BoundReport]
    """
    if isinstance(target, EigenReport):
        reports = [
            _convexity_report(target.normalized + [target.u0]),
            _symmetry_report(target.u0, spec.psi, "eigen"),
        ]
        schedule = ContinuationSchedule.geometric(
            spec.k, base=compare_base, steps=len(target.p_list)
        )
        other = continuation_eigen(spec, schedule, progress=False)
        reports.append(
            BoundReport(
                "schedule_independence",
                abs(other.lambda0 - target.lambda0),
                SCHEDULE_TOL,
                notes=f"lambda0 with base {compare_base}: {other.lambda0:.10g}",
            )
        )
        return reports

    u = _solution_field(target)
    reports = [_convexity_report([u]), _symmetry_report(u, spec.f, "solve")]
    distances = [
        newton_solve(spec, guess).u.sup_distance(u)
        for guess in multi_start_guesses(spec, num_starts, seed)
    ]
    reports.append(
        BoundReport(
            "multi_start",
            max(distances),
            MULTI_START_TOL,
            notes=f"{num_starts} starts, seed {seed}",
        )
    )
    return reports


def check_cross_method(eigen_report, spec):
    """Agreement of the continuation limit with the bordered Newton solve from it."""
    direct = direct_eigen_solve(
        spec, u_init=eigen_report.u0, lambda_init=eigen_report.lambda0
    )
    difference = max(
        abs(direct.lam - eigen_report.lambda0), direct.u.sup_distance(eigen_report.u0)
    )
    return BoundReport(
        "cross_method",
        difference,
        CROSS_METHOD_TOL,
        notes=f"direct lambda {direct.lam:.10g} in {direct.iterations} iterations",
    )


def run_solution_checks(
    solution, spec, with_properties=True, num_starts=MULTI_START, seed=0
):
    """All the estimates applicable to a solution of the L_p equation."""
    reports = (
        check_volume_ratio(solution, spec)
        + check_max_u_chain(solution, spec)
        + [check_gradient_bound(solution), check_W_bound(solution, spec)]
    )
    if with_properties:
        reports += check_solution_properties(
            solution, spec, num_starts=num_starts, seed=seed
        )
    return reports


def run_eigen_checks(
    eigen_report, spec, with_properties=True, compare_base=COMPARE_BASE
):
    """All the estimates applicable to an eigen continuation report."""
    last_spec = spec.replace(
        p=eigen_report.p_list[-1], lam=eigen_report.lambda_list[-1]
    )
    last = eigen_report.normalized[-1]
    reports = check_lambda_bounds(eigen_report, spec) + [
        check_gradient_bound(last),
        check_W_bound(last, last_spec),
    ]
    if with_properties:
        reports += check_solution_properties(
            eigen_report, spec, compare_base=compare_base
        )
        reports.append(check_cross_method(eigen_report, spec))
    return reports
