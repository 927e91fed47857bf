"""
Module reading the run configuration files and performing the validation and
sanitization of the configuration data.

A configuration is UTF-8 text of ``key = value`` lines, ``#`` starting a comment.
The recognised keys, with their defaults (``-`` marks a required key):

    mode                    -        solve | eigen | flow | validate
    problem.n               -        1 or 2, dimension of the sphere S^n
    problem.k               -        1 <= k <= n
    problem.p               -        p > k+1 in solve and flow modes, forced to k+1
                                     in eigen mode
    problem.lambda          1.0
    problem.f, problem.psi  -        exactly one, a preset ``name:params`` (see
                                     `lp2eigen.presets`)
    grid.n_points           256      nodes on S^1
    grid.n_theta, grid.n_phi 48, 96  nodes on S^2
    solver.tol_newton       1e-9 (n=1), 1e-8 (n=2)
    solver.max_iter         60
    solver.margin           0.1
    solver.initial          none     preset of the initial support function of the
                                     solve and flow modes, defaults to the round
                                     sphere balancing the mean of f
    schedule.base           2        eigen schedule p_j = k + 1 + base^(-j)
    schedule.steps          8
    schedule.warm_start     true
    schedule.compare_base   3        second schedule of the independence check
    flow.t_max              50
    flow.stop_tol           1e-6
    flow.c_cfl              0.2
    flow.dt                 none     optional cap on the flow time step
    flow.renormalize        true
    flow.snapshot_every     0        mesh snapshot every that many steps (0 = off)
    validate.solution       -        validate mode only: report.json of a solve run
    checks.properties       true     run the convexity/symmetry/uniqueness checks
    checks.multi_start      3
    output.dir              none     defaults to OUTPUT_DIR/<mode>
    seed                    0

Validate mode replays the checks on a stored solution, whose problem keys are read
from the stored report, so no problem.* keys are needed in its configuration.

A `RunConfig` instantiated without exceptions signals a consistent configuration.
"""

from pathlib import Path

from config.config import (
    INPUT_DIR,
    OUTPUT_DIR,
    DEFAULT_N_POINTS,
    DEFAULT_N_THETA,
    DEFAULT_N_PHI,
    MAX_ITER,
    CONE_MARGIN,
    SCHEDULE_BASE,
    SCHEDULE_STEPS,
    COMPARE_BASE,
    FLOW_T_MAX,
    FLOW_STOP_TOL,
    CFL,
    MULTI_START,
)
from .equation_solver import ProblemSpec
from .exceptions import ConfigInputError, GridError, PresetError, ProblemSpecError
from .presets import parse_preset, preset_function
from .sphere_domain import build_grid, is_even

MODES = ("solve", "eigen", "flow", "validate")


def _to_bool(value):
    if value.lower() in ("true", "yes", "1"):
        return True
    if value.lower() in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: '{value}'")


def _to_optional_float(value):
    return None if value.lower() == "none" else float(value)


# key: (attribute, converter)
KEYS = {
    "mode": ("mode", str),
    "problem.n": ("n", int),
    "problem.k": ("k", int),
    "problem.p": ("p", float),
    "problem.lambda": ("lam", float),
    "problem.f": ("f", str),
    "problem.psi": ("psi", str),
    "grid.n_points": ("n_points", int),
    "grid.n_theta": ("n_theta", int),
    "grid.n_phi": ("n_phi", int),
    "solver.tol_newton": ("tol_newton", _to_optional_float),
    "solver.max_iter": ("max_iter", int),
    "solver.margin": ("margin", float),
    "solver.initial": ("initial", str),
    "schedule.base": ("schedule_base", float),
    "schedule.steps": ("schedule_steps", int),
    "schedule.warm_start": ("warm_start", _to_bool),
    "schedule.compare_base": ("compare_base", float),
    "flow.t_max": ("t_max", float),
    "flow.stop_tol": ("stop_tol", float),
    "flow.c_cfl": ("c_cfl", float),
    "flow.dt": ("dt", _to_optional_float),
    "flow.renormalize": ("renormalize", _to_bool),
    "flow.snapshot_every": ("snapshot_every", int),
    "validate.solution": ("solution", str),
    "checks.properties": ("check_properties", _to_bool),
    "checks.multi_start": ("multi_start", int),
    "output.dir": ("output_dir", str),
    "seed": ("seed", int),
}


def parse_lines(text):
    """Parse ``key = value`` lines into ``{key: (value, line_number)}``.

    Raises
    ------
    ConfigInputError
        On malformed lines, unknown keys or duplicate keys.

    Examples
    --------
    >>> parse_lines("# eigen run\\nproblem.n = 2   # sphere\\n\\nproblem.k=1")
    {'problem.n': ('2', 2), 'problem.k': ('1', 4)}
    """
    entries = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInputError(f"Expected 'key = value', got '{line}'", line_number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigInputError(f"Unknown key '{key}'", line_number)
        if key in entries:
            raise ConfigInputError(f"Duplicate key '{key}'", line_number)
        if not value:
            raise ConfigInputError(f"Missing value of '{key}'", line_number)
        entries[key] = (value, line_number)
    return entries


class RunConfig:
    """Class representing a validated run configuration.

    Parameters
    ----------
    entries : dict
        As returned by `parse_lines`.
    mode : str, optional
        Overrides the ``mode`` key (the command-line mode).
    allow_non_even : bool, default=False
        Permit non-even psi in eigen mode.

    Attributes
    ----------
    raw_input : dict[str, str]
        The parsed key-value pairs, echoed in every report.
    mode : str
    n, k : int
    p, lam : float
    data_key : str
        "f" or "psi".
    data_name : str
    data_params : list[str]
    resolution : tuple[int]
    output_dir : Path

    Raises
    ------
    ConfigInputError
        If any inconsistency is detected, with the line number of the offending key
        where it applies.
    """

    def __init__(self, entries, mode=None, allow_non_even=False):
        self.raw_input = {key: value for key, (value, _) in entries.items()}
        self._lines = {key: line for key, (_, line) in entries.items()}
        self.allow_non_even = allow_non_even

        # defaults:
        self.mode = None
        self.n = self.k = self.p = None
        self.lam = 1.0
        self.f = self.psi = None
        self.n_points, self.n_theta, self.n_phi = (
            DEFAULT_N_POINTS,
            DEFAULT_N_THETA,
            DEFAULT_N_PHI,
        )
        self.tol_newton = None
        self.max_iter = MAX_ITER
        self.margin = CONE_MARGIN
        self.schedule_base = SCHEDULE_BASE
        self.schedule_steps = SCHEDULE_STEPS
        self.warm_start = True
        self.compare_base = COMPARE_BASE
        self.t_max = FLOW_T_MAX
        self.stop_tol = FLOW_STOP_TOL
        self.c_cfl = CFL
        self.dt = None
        self.renormalize = True
        self.snapshot_every = 0
        self.initial = None
        self.solution = None
        self.check_properties = True
        self.multi_start = MULTI_START
        self.output_dir = None
        self.seed = 0

        # populate the attributes:
        for key, (value, line) in entries.items():
            if key not in KEYS:
                raise ConfigInputError(f"Unknown key '{key}'", line)
            attr, converter = KEYS[key]
            try:
                setattr(self, attr, converter(value))
            except (TypeError, ValueError) as e:
                raise ConfigInputError(f"Invalid value of '{key}': {e}", line)
        if mode is not None:
            self.mode = mode
        if self.mode not in MODES:
            raise ConfigInputError(
                f"Mode must be one of {', '.join(MODES)}, got {self.mode}",
                self._lines.get("mode"),
            )
        if self.output_dir is None:
            self.output_dir = OUTPUT_DIR / self.mode
        self.output_dir = Path(self.output_dir)

        if self.mode == "validate":
            if self.solution is None:
                raise ConfigInputError("validate mode requires 'validate.solution'")
            self.solution = Path(self.solution)
            return
        self._validate_problem()

    def _line(self, key):
        return self._lines.get(key)

    def _validate_problem(self):
        for key in ("problem.n", "problem.k"):
            if key not in self.raw_input:
                raise ConfigInputError(f"Missing mandatory key '{key}'")
        if self.n not in (1, 2):
            raise ConfigInputError(
                f"1 <= n <= 2 required, got n={self.n}", self._line("problem.n")
            )
        if not 1 <= self.k <= self.n:
            raise ConfigInputError(
                f"1 <= k <= n required, got k={self.k}, n={self.n}",
                self._line("problem.k"),
            )
        if (self.f is None) == (self.psi is None):
            raise ConfigInputError("Exactly one of 'problem.f', 'problem.psi' required")
        self.data_key = "f" if self.f is not None else "psi"
        data_line = self._line(f"problem.{self.data_key}")
        try:
            data_text = getattr(self, self.data_key)
            self.data_name, self.data_params = parse_preset(data_text)
        except PresetError as e:
            raise PresetError(str(e), data_line)
        if self.initial is not None:
            try:
                parse_preset(self.initial)
            except PresetError as e:
                raise PresetError(str(e), self._line("solver.initial"))

        if self.mode == "eigen":
            if self.k >= self.n:
                raise ConfigInputError(
                    "k < n required for eigen mode (k = n is allowed in solve mode)",
                    self._line("problem.k"),
                )
            self.p = self.k + 1.0
        else:
            if self.p is None:
                raise ConfigInputError("Missing mandatory key 'problem.p'")
            if not self.p > self.k + 1:
                raise ConfigInputError(
                    f"p > k+1 required in {self.mode} mode, got p={self.p}",
                    self._line("problem.p"),
                )

        try:
            grid = self.grid()
            data = preset_function(self.data_name, self.data_params, grid)
        except PresetError as e:
            raise PresetError(str(e), data_line)
        except GridError as e:
            raise ConfigInputError(f"Invalid grid: {e}")
        self.even_data = is_even(data)
        if self.mode == "eigen" and not self.even_data and not self.allow_non_even:
            raise ConfigInputError(
                "Even psi required for eigen mode (pass --allow-non-even to override)",
                data_line,
            )

    @property
    def resolution(self):
        if self.n == 1:
            return (self.n_points,)
        return self.n_theta, self.n_phi

    def grid(self):
        return build_grid(self.n, self.resolution)

    def problem_spec(self, grid=None):
        """`ProblemSpec` of the configured problem, on a new grid unless given.

        Raises
        ------
        ConfigInputError
            If the solver parameters are rejected by the `ProblemSpec`.
        """
        grid = self.grid() if grid is None else grid
        data = preset_function(self.data_name, self.data_params, grid)
        try:
            return ProblemSpec(
                grid,
                k=self.k,
                p=self.p,
                lam=self.lam,
                tol_newton=self.tol_newton,
                max_iter=self.max_iter,
                margin=self.margin,
                **{self.data_key: data},
            )
        except ProblemSpecError as e:
            raise ConfigInputError(str(e))

    def initial_guess(self, grid):
        if self.initial is None:
            return None
        return preset_function(*parse_preset(self.initial), grid)

    def echo(self):
        """Configuration echo of the report headers."""
        return {**self.raw_input, "mode": self.mode}


def parse_config(text, mode=None, allow_non_even=False):
    """Parse and validate configuration text into a `RunConfig`.

    Examples
    --------
    >>> config = parse_config("mode = eigen\\nproblem.n = 2\\nproblem.k = 1\\n"
    ...                       "problem.psi = constant:1")
    >>> config.p, config.resolution, config.schedule_steps
    (2.0, (48, 96), 8)
    """
    return RunConfig(parse_lines(text), mode=mode, allow_non_even=allow_non_even)


def read_config(path, mode=None, allow_non_even=False):
    """Read and validate a configuration file.

    A relative path not found from the working directory is looked up in
    INPUT_DIR, so the bundled configurations can be named by file name only.

    Raises
    ------
    ConfigInputError
        If the file does not exist or its content is invalid.
    """
    path = Path(path)
    if not path.is_file() and not path.is_absolute():
        path = INPUT_DIR / path
    if not path.is_file():
        raise ConfigInputError(f"Configuration file not found: {path}")
    return parse_config(
        path.read_text(encoding="utf-8"), mode=mode, allow_non_even=allow_non_even
    )
