"""
Module with functionality for processing a single run configuration: solving the
configured problem, running the bound checks and logging all the outputs.

The processing is controlled by the run configuration files (see `read_inputs` module
and its docstrings). Outputs logged into the run output directory:

    report.json         config echo, grid, code version and the mode's results
    bounds.json         the array of bound reports
    lambda_table.csv    eigen mode, one row per continuation exponent
    flow_history.csv    flow mode, one row per accepted time step
    shape.obj           n=2, triangle mesh of the solution (1-based faces)
    shape.csv           n=1, closed polyline of the solution
    snapshots/          flow mode, periodic shape snapshots
"""

import json
from pathlib import Path

import pandas as pd

from lp2eigen import __version__
from .eigen_continuation import (
    ContinuationSchedule,
    EigenReport,
    barrier_radius,
    continuation_eigen,
)
from .equation_solver import newton_solve, sphere_guess
from .exceptions import (
    AdmissibilityError,
    ConfigInputError,
    ContinuationError,
    FieldError,
    FlowError,
    ProblemSpecError,
    ShapeError,
    SolverError,
)
from .flow_simulator import flow_run, steady_residual, unit_lambda_rescale
from .hypersurface import triangle_mesh, polyline
from .read_inputs import RunConfig, read_config
from .validation_suite import (
    check_gradient_bound,
    check_lambda_bounds,
    check_W_bound,
    run_eigen_checks,
    run_solution_checks,
)

EXIT_SUCCESS = 0
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3
EXIT_BOUND_FAILURE = 4

CONFIG_ERRORS = (ConfigInputError, ProblemSpecError, FileExistsError)
SOLVER_ERRORS = (
    SolverError,
    ContinuationError,
    FlowError,
    AdmissibilityError,
    ShapeError,
)


def _read_stored_report(path):
    if not path.is_file():
        raise ConfigInputError(f"Stored solution not found: {path}")
    try:
        with open(path, encoding="utf-8") as fp:
            stored = json.load(fp)
    except json.JSONDecodeError as e:
        raise ConfigInputError(f"Stored report {path} is not valid JSON: {e}") from e
    if (
        not isinstance(stored, dict)
        or not isinstance(stored.get("config"), dict)
        or "mode" not in stored["config"]
        or "solution" not in stored
    ):
        raise ConfigInputError(f"No stored solution found in {path}")
    return stored


class RunProcessor:
    """Class for processing a single run configuration.

    Parameters
    ----------
    config : RunConfig

    Attributes
    ----------
    config : RunConfig
    output_dir : Path
    grid : SphereGrid
    spec : ProblemSpec
        None in validate mode until the stored solution is loaded.
    results : dict
        The mode's results, logged into the report.
    solution : ScalarField
        The solution whose shape is logged, if any.
    bounds : list[BoundReport]

    Raises
    ------
    FileExistsError
        If the output directory exists and is not empty. To rerun, the directory
        needs to first be manually removed, or another ``output.dir`` chosen.
    """

    def __init__(self, config):
        self.config = config
        self.output_dir = config.output_dir
        if self.output_dir.exists() and list(self.output_dir.iterdir()):
            raise FileExistsError(f"The directory {self.output_dir} is not empty!")
        self.grid = None
        self.spec = None
        if config.mode != "validate":
            self.grid = config.grid()
            self.spec = config.problem_spec(self.grid)
        self.results = {}
        self.solution = None
        self.bounds = []
        self.eigen_report = None
        self.flow_state = None

    @property
    def checks_passed(self):
        return all(report.satisfied for report in self.bounds)

    def solve(self):
        u0 = self.config.initial_guess(self.grid)
        report = newton_solve(self.spec, u0)
        self.solution = report.u
        self.results = {**report.to_dict(), "barrier_radius": barrier_radius(self.spec)}
        self.bounds = run_solution_checks(
            report,
            self.spec,
            with_properties=self.config.check_properties,
            num_starts=self.config.multi_start,
            seed=self.config.seed,
        )

    def eigen(self):
        config = self.config
        schedule = ContinuationSchedule.geometric(
            config.k,
            base=config.schedule_base,
            steps=config.schedule_steps,
            warm_start=config.warm_start,
        )
        report = continuation_eigen(self.spec, schedule)
        self.eigen_report = report
        self.solution = report.u0
        self.bounds = run_eigen_checks(
            report,
            self.spec,
            with_properties=config.check_properties,
            compare_base=config.compare_base,
        )
        self.results = report.to_dict()

    def flow(self):
        config = self.config
        u0 = config.initial_guess(self.grid)
        if u0 is None:
            u0 = sphere_guess(self.spec)
        snapshot_dir = self.output_dir / "snapshots"

        def snapshot(state):
            snapshot_dir.mkdir(parents=True, exist_ok=True)
            self._log_shape(state.u, snapshot_dir / f"shape_{state.steps:07d}")

        state, converged = flow_run(
            self.spec,
            u0,
            t_max=config.t_max,
            stop_tol=config.stop_tol,
            renormalize=config.renormalize,
            dt=config.dt,
            c_cfl=config.c_cfl,
            snapshot_every=config.snapshot_every,
            snapshot_callback=snapshot,
        )
        self.flow_state = state
        lambda_hat, residual_sup = steady_residual(state.u, self.spec)
        self.results = {
            "converged": converged,
            "t": state.t,
            "steps": state.steps,
            "rejected_steps": state.rejected,
            "lambda_hat": lambda_hat,
            "residual_sup": residual_sup,
        }
        self.solution = state.u
        if converged:
            # the steady shape dilated to solve the equation with the configured lambda
            self.solution = unit_lambda_rescale(state.u, self.spec)
            self.bounds = run_solution_checks(
                self.solution,
                self.spec,
                with_properties=config.check_properties,
                num_starts=config.multi_start,
                seed=config.seed,
            )

    def validate(self):
        """Replay the bound checks on the solution stored in a previous report.

        Raises
        ------
        ConfigInputError
            If the stored report is missing, is not valid JSON or does not hold a
            solution consistent with its own configuration echo.
        """
        path = self.config.solution
        stored = _read_stored_report(path)
        echo = dict(stored["config"])
        stored_mode = echo.pop("mode")
        entries = {
            key: (value, None)
            for key, value in echo.items()
            if not key.startswith(("output.", "validate."))
        }
        stored_config = RunConfig(entries, mode=stored_mode, allow_non_even=True)
        self.grid = stored_config.grid()
        self.spec = stored_config.problem_spec(self.grid)
        try:
            u = self.grid.field(stored["solution"])
        except (FieldError, TypeError, ValueError) as e:
            raise ConfigInputError(f"Stored solution in {path} is invalid: {e}") from e
        self.solution = u
        self.results = {"source": str(path), "source_mode": stored_mode}
        if stored_mode == "eigen":
            result = stored.get("result")
            missing = [
                key
                for key in ("p_list", "lambda_list", "lambda0")
                if not isinstance(result, dict) or key not in result
            ]
            if missing:
                raise ConfigInputError(
                    f"Stored eigen result in {path} lacks {', '.join(missing)}"
                )
            report = EigenReport(
                p_list=result["p_list"],
                lambda_list=result["lambda_list"],
                lambda0=result["lambda0"],
                u0=u,
            )
            eigen_spec = self.spec.replace(p=self.spec.k + 1, lam=result["lambda0"])
            self.bounds = check_lambda_bounds(report, self.spec) + [
                check_gradient_bound(u),
                check_W_bound(u, eigen_spec),
            ]
        else:
            self.bounds = run_solution_checks(
                u,
                self.spec,
                with_properties=self.config.check_properties,
                num_starts=self.config.multi_start,
                seed=self.config.seed,
            )

    def _log_report(self):
        """Log the report with the config echo, the grid and the code version.

        The report holds no timestamps, identical runs log identical reports.
        """
        self.output_dir.mkdir(parents=True, exist_ok=True)
        report = {
            "version": __version__,
            "mode": self.config.mode,
            "config": self.config.echo(),
            "grid": {
                "n": self.grid.n,
                "resolution": list(self.grid.resolution),
                "size": self.grid.size,
                "grid_error": self.grid.grid_error,
            },
            "result": self.results,
            "checks_passed": self.checks_passed,
        }
        if self.solution is not None:
            report["solution"] = self.solution.values.tolist()
        with open(self.output_dir / "report.json", "w") as fp:
            json.dump(report, fp, indent=2)

    def _log_bounds(self):
        self.output_dir.mkdir(parents=True, exist_ok=True)
        with open(self.output_dir / "bounds.json", "w") as fp:
            json.dump([report.to_dict() for report in self.bounds], fp, indent=2)

    def _log_lambda_table(self):
        """Log the continuation table, if the eigen continuation has been run."""
        if self.eigen_report is None:
            return
        with open(self.output_dir / "lambda_table.csv", "w") as fp:
            self.eigen_report.lambda_table().to_csv(fp, header=True, index=False)

    def _log_flow_history(self):
        if self.flow_state is None:
            return
        with open(self.output_dir / "flow_history.csv", "w") as fp:
            self.flow_state.history_table().to_csv(fp, header=True, index=False)

    @staticmethod
    def _log_shape(u, path_stem):
        """Log the shape as an .obj mesh (n=2) or a .csv polyline (n=1).

        Non-convex shapes are not logged.
        """
        try:
            if u.grid.n == 2:
                vertices, faces = triangle_mesh(u)
            else:
                points = polyline(u)
        except ShapeError:
            return
        if u.grid.n == 2:
            with open(path_stem.with_suffix(".obj"), "w") as fp:
                for x, y, z in vertices:
                    fp.write(f"v {x:.12g} {y:.12g} {z:.12g}\n")
                for i, j, k in faces + 1:
                    fp.write(f"f {i} {j} {k}\n")
        else:
            with open(path_stem.with_suffix(".csv"), "w") as fp:
                pd.DataFrame(points, columns=["x", "y"]).to_csv(
                    fp, header=True, index=False
                )

    def process(self):
        """Run the configured mode and log all the outputs.

        Returns
        -------
        bool
            True if all the bound checks are satisfied.

        Raises
        ------
        ContinuationError
            If the extrapolated eigen pair fails its verification; the outputs are
            logged before raising.
        """
        getattr(self, self.config.mode)()
        self._log_report()
        self._log_bounds()
        self._log_lambda_table()
        self._log_flow_history()
        if self.solution is not None:
            self._log_shape(self.solution, self.output_dir / "shape")
        if self.eigen_report is not None and not self.eigen_report.verified:
            raise ContinuationError(
                f"Extrapolated eigen pair not verified: residual "
                f"{self.eigen_report.final_residual:.3e} exceeds the grid tolerance",
                report=self.eigen_report,
            )
        return self.checks_passed


def process_run(
    config,
    mode=None,
    allow_non_even=False,
    output_dir=None,
    raise_exceptions=True,
):
    """A top-level function for processing a single run configuration.

    See the `RunProcessor` class for further documentation on errors etc.

    Parameters
    ----------
    config : str or Path or RunConfig
        Path to the configuration file, or a parsed configuration.
    mode : str, optional
        Overrides the configured mode.
    allow_non_even : bool, default=False
    output_dir : str or Path, optional
        Overrides the configured output directory.
    raise_exceptions : bool, default=True
        If False, the configuration and solver errors are caught and printed to
        stdout, and mapped to the exit code instead of halting the program.

    Returns
    -------
    int
        0 on success, 2 on configuration errors, 3 on solver failures, 4 if any of the
        bound checks failed.
    """
    name = Path(config).name if isinstance(config, (str, Path)) else config.mode

    def run():
        run_config = config
        if not isinstance(run_config, RunConfig):
            run_config = read_config(run_config, mode, allow_non_even)
        if output_dir is not None:
            run_config.output_dir = Path(output_dir)
        passed = RunProcessor(run_config).process()
        return EXIT_SUCCESS if passed else EXIT_BOUND_FAILURE

    if raise_exceptions:
        return run()
    try:
        return run()
    except CONFIG_ERRORS as e:
        print(f"{name}: CONFIGURATION ABORTED: {type(e).__name__}: {e}")
        return EXIT_CONFIG_ERROR
    except SOLVER_ERRORS as e:
        print(f"{name}: SOLVE ABORTED: {type(e).__name__}: {e}")
        return EXIT_SOLVER_FAILURE
