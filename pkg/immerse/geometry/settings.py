"""
Numerical tolerances shared by the geometry core.
Every value can be overridden through the environment (or a .env file).
"""
import os
from dotenv import load_dotenv

load_dotenv()


def _float_env(name: str, default: str) -> float:
    return float(os.getenv(name, default))


# ---------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------
CONDITION_LIMIT = _float_env("IMMERSE_CONDITION_LIMIT", "1e12")
DET_LIMIT = _float_env("IMMERSE_DET_LIMIT", "1e-12")
SIGNATURE_TOL = _float_env("IMMERSE_SIGNATURE_TOL", "1e-9")

# ---------------------------------------------------------
# Structures & solver
# ---------------------------------------------------------
SPEC_TOL = _float_env("IMMERSE_SPEC_TOL", "1e-10")
ADMISSIBLE_TOL = _float_env("IMMERSE_ADMISSIBLE_TOL", "1e-8")
FRAME_TOL = _float_env("IMMERSE_FRAME_TOL", "1e-8")
DRIFT_LIMIT = _float_env("IMMERSE_DRIFT_LIMIT", "1e-6")
RESIDUAL_GATE = _float_env("IMMERSE_RESIDUAL_GATE", "1e-6")
CHECK_TOL = _float_env("IMMERSE_CHECK_TOL", "1e-8")
VERIFY_TOL = _float_env("IMMERSE_VERIFY_TOL", "1e-4")

# ---------------------------------------------------------
# Finite differences & sampling
# ---------------------------------------------------------
FD_FLOOR = _float_env("IMMERSE_FD_FLOOR", "1e-5")
FD_FRACTION = _float_env("IMMERSE_FD_FRACTION", "0.01")
SAMPLES_PER_NODE = int(os.getenv("IMMERSE_SAMPLES_PER_NODE", "8"))
DEFAULT_SEED = int(os.getenv("IMMERSE_SEED", "0"))
MAX_SECOND_KIND_DIM = int(os.getenv("IMMERSE_MAX_SECOND_KIND_DIM", "10"))
