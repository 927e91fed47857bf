from pathlib import Path

file_dir = Path(__file__).parent
project_root = file_dir.parent

# ********************************** PATHS ******************************************* #
OUTPUT_DIR = project_root / "output"
INPUT_DIR = project_root / "input"

# ********************************** GRIDS ******************************************* #
# number of nodes on S^1, and (N_theta, N_phi) on S^2
DEFAULT_N_POINTS = 256
DEFAULT_N_THETA = 48
DEFAULT_N_PHI = 96

# ********************************* NEWTON ******************************************* #
TOL_NEWTON = {1: 1e-9, 2: 1e-8}
MAX_ITER = 60
# trial iterates must keep this fraction of the current admissibility margin
CONE_MARGIN = 0.1
MIN_DAMPING = 1e-8

# ****************************** CONTINUATION **************************************** #
# p_j = k + 1 + SCHEDULE_BASE**(-j), j = 1..SCHEDULE_STEPS
SCHEDULE_BASE = 2.0
SCHEDULE_STEPS = 8
COMPARE_BASE = 3.0
EXTRAPOLATION_POINTS = 4

# ********************************** FLOW ******************************************** #
CFL = 0.2
DT_MIN = 1e-12
FLOW_T_MAX = 50.0
FLOW_STOP_TOL = 1e-6

# ******************************* VALIDATION ***************************************** #
# relative slack of every bound check; tight bounds (f constant) are attained only to
# the Newton tolerance, up to 1e-8 on S^2, times the exponent (p-1)/k of u
BOUND_RTOL = 1e-7
LAMBDA_BRACKET_TOL = 1e-6
MULTI_START = 3

# ****************************** LOCAL CONFIG **************************************** #
# load the local config, if present:
try:
    from .config_local import *
except ImportError:
    pass
