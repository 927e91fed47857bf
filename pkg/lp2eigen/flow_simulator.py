"""
Module simulating the anisotropic sigma_k power flow of convex hypersurfaces,

    dX/dt = -sign(1-p) (f(nu) sigma_k(kappa)) ** (1/(1-p)) nu,

realized on the support function (a normal speed s moves u(x) by s at the fixed normal
direction x). The flow is volume-normalized,

    du/dt = s - eta u,    eta = int(s det h) / ((n+1) V),

so that its fixed points are exactly the self-similar solutions, i.e. the solutions of
the L_p curvature equation with lambda = eta ** (1-p). The time stepping is explicit
Euler with step rejection, the step size bounded by the parabolic stability limit of
the linearized speed.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config.config import CFL, DT_MIN
from .curvature_algebra import (
    elementary_symmetric,
    quotient_from_spectrum,
    sigma_k_gradient,
)
from .equation_solver import _admissibility, _require_admissible
from .exceptions import AdmissibilityError, FlowError, ProblemSpecError
from .hypersurface import ShapeBundle


@dataclass
class FlowState:
    """State of the flow: support function, time, step size and trajectory.

    `history` holds (t, V, sup-residual) per accepted step, the residual being that of
    the L_p equation with the best-fitting lambda.
    """

    u: object
    t: float = 0.0
    dt: float = None
    renormalize: bool = True
    history: list = field(default_factory=list)
    volume0: float = None
    steps: int = 0
    rejected: int = 0

    def history_table(self):
        return pd.DataFrame(self.history, columns=["t", "V", "residual"])


def _curvature_sigma(bundle, k):
    """sigma_k of the principal curvatures, from the principal radii."""
    n = bundle.grid.n
    sigma = elementary_symmetric(bundle.radii)
    return sigma[:, n - k] / sigma[:, n]


def normal_speed(bundle, spec):
    """Normal speed -sign(1-p) (f sigma_k(kappa)) ** (1/(1-p)) of a convex bundle.

    Raises
    ------
    ProblemSpecError
        If p = 1.
    AdmissibilityError
        If sigma_k(kappa) is not positive at some node.
    """
    if spec.p == 1:
        raise ProblemSpecError("The power flow is undefined for p = 1")
    curvature = _curvature_sigma(bundle, spec.k)
    if not np.all(curvature > 0) or not bundle.convex:
        node = int(np.argmin(np.where(np.isfinite(curvature), curvature, -np.inf)))
        raise AdmissibilityError(
            f"sigma_k of the curvatures not positive at node {node}", node=node
        )
    speed = (spec.f.values * curvature) ** (1 / (1 - spec.p))
    return bundle.u.with_values(-np.sign(1 - spec.p) * speed)


def max_diffusion(bundle, speed, spec):
    """Largest derivative of the normal speed with respect to a principal radius."""
    n, k = spec.n, spec.k
    radii = bundle.radii
    d_log = -1 / radii
    if k < n:
        sigma = elementary_symmetric(radii)
        d_log = d_log + sigma_k_gradient(radii, n - k) / sigma[:, n - k, None]
    return float(np.max(speed.values[:, None] / (1 - spec.p) * d_log))


def stable_time_step(bundle, speed, spec, c_cfl=CFL):
    """Explicit step bound c_cfl * (min node spacing)^2 / max diffusion."""
    return c_cfl * spec.grid.min_spacing**2 / max_diffusion(bundle, speed, spec)


def steady_residual(u, spec):
    """Best-fitting lambda and the sup-residual of the L_p equation with it.

    lambda is fitted by weighted least squares of F(h) = (f/lambda)^(1/k) u^((p-1)/k).

    Returns
    -------
    lam : float
    residual_sup : float
    """
    bundle = ShapeBundle(u)
    _require_admissible(bundle, spec)
    weights = spec.grid.weights
    quotient = quotient_from_spectrum(bundle.radii, spec.k)
    coefficient = spec.f.values ** (1 / spec.k) * u.values**spec.exponent
    beta = np.sum(weights * quotient * coefficient) / np.sum(weights * coefficient**2)
    lam = float(beta ** (-spec.k))
    return lam, float(np.max(np.abs(quotient - beta * coefficient)))


def unit_lambda_rescale(u, spec):
    """Dilate a self-similar solution so that it solves the equation with spec.lam.

    Uses lambda(s u) = lambda(u) s ** (p-1-k) with the fitted lambda of u.
    """
    if spec.gap == 0:
        raise ProblemSpecError("Dilations do not change lambda at p = k+1")
    lam, _ = steady_residual(u, spec)
    return u.with_values(u.values * (spec.lam / lam) ** (1 / spec.gap))


def flow_step(state, spec, c_cfl=CFL):
    """One explicit Euler step of the (optionally volume-normalized) flow.

    The step is the smaller of ``state.dt`` and the stability bound, halved until the
    new support function is admissible. The accepted step is appended to the shared
    history.

    Raises
    ------
    FlowError
        If the step size falls below DT_MIN.
    """
    u = state.u
    bundle = ShapeBundle(u)
    _require_admissible(bundle, spec)
    n = spec.n
    speed = normal_speed(bundle, spec)
    eta = 0.0
    if state.renormalize:
        eta = spec.grid.integrate(speed.values * bundle.det_h) / (
            (n + 1) * bundle.volume
        )
    volume0 = bundle.volume if state.volume0 is None else state.volume0
    dt = stable_time_step(bundle, speed, spec, c_cfl)
    if state.dt is not None:
        dt = min(dt, state.dt)
    rejected = state.rejected
    while True:
        trial = u.with_values(u.values + dt * (speed.values - eta * u.values))
        trial_bundle = ShapeBundle(trial)
        if trial_bundle.convex and trial_bundle.volume > 0:
            if state.renormalize:
                scale = (volume0 / trial_bundle.volume) ** (1 / (n + 1))
                trial = trial.with_values(trial.values * scale)
                trial_bundle = ShapeBundle(trial)
            if _admissibility(trial_bundle, spec.k).admissible:
                break
        rejected += 1
        dt /= 2
        if dt < DT_MIN:
            raise FlowError(f"Flow time step underflow at t={state.t:.6g}", state=state)
    new_state = FlowState(
        u=trial,
        t=state.t + dt,
        dt=state.dt,
        renormalize=state.renormalize,
        history=state.history,
        volume0=volume0,
        steps=state.steps + 1,
        rejected=rejected,
    )
    _, res = steady_residual(trial, spec)
    new_state.history.append((new_state.t, trial_bundle.volume, res))
    return new_state


def flow_run(
    spec,
    u0,
    t_max,
    stop_tol,
    renormalize=True,
    dt=None,
    c_cfl=CFL,
    snapshot_every=0,
    snapshot_callback=None,
):
    """Run the flow until it is steady to `stop_tol` or the time exceeds `t_max`.

    Parameters
    ----------
    spec : ProblemSpec
        p > k+1.
    u0 : ScalarField
        Admissible initial support function.
    t_max : float
    stop_tol : float
        Bound on the sup-residual of the L_p equation with the fitted lambda.
    renormalize : bool, default=True
    dt : float, optional
        Upper bound on the step size, the stability bound applies regardless.
    c_cfl : float, optional
    snapshot_every : int, default=0
        If positive, `snapshot_callback` is called with the state every that many
        accepted steps.
    snapshot_callback : callable, optional

    Returns
    -------
    state : FlowState
        The final state if converged, otherwise the state with the smallest residual.
    converged : bool

    Raises
    ------
    ProblemSpecError
        If p <= k+1.
    FlowError
        On time step underflow.
    """
    if spec.gap <= 0:
        raise ProblemSpecError(f"Flow runs require p > k+1, got p={spec.p}")
    bundle = ShapeBundle(u0)
    _require_admissible(bundle, spec)
    state = FlowState(u=u0, dt=dt, renormalize=renormalize, volume0=bundle.volume)
    _, res = steady_residual(u0, spec)
    state.history.append((0.0, bundle.volume, res))
    best, best_res = state, res
    while res > stop_tol and state.t < t_max:
        state = flow_step(state, spec, c_cfl)
        res = state.history[-1][-1]
        if res < best_res:
            best, best_res = state, res
        if snapshot_every and snapshot_callback and state.steps % snapshot_every == 0:
            snapshot_callback(state)
    if res <= stop_tol:
        return state, True
    return best, False
