"""
Application settings loaded from environment variables.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(x) for x in raw.split(",") if x.strip())


# Randomness / concurrency
DEFAULT_MASTER_SEED = int(os.getenv("GF_MASTER_SEED", "20240611"))
DEFAULT_WORKERS = int(os.getenv("GF_WORKERS", "1"))

# Linear algebra and root finding
EIG_REL_TOL = float(os.getenv("GF_EIG_REL_TOL", "1e-12"))
EIG_MAX_ITER = int(os.getenv("GF_EIG_MAX_ITER", "100000"))
ROOT_TOL = float(os.getenv("GF_ROOT_TOL", "1e-10"))
CUMULANT_RESIDUAL_TOL = float(os.getenv("GF_CUMULANT_RESIDUAL_TOL", "1e-9"))
TRANSITION_SUM_TOL = float(os.getenv("GF_TRANSITION_SUM_TOL", "1e-12"))
ADMISSIBLE_SCAN_GRID = tuple(2.0 ** k for k in range(-4, 6))

# Path simulation
GAUSS_CLOCK_TOL = float(os.getenv("GF_GAUSS_CLOCK_TOL", "0.2"))
PATH_CHUNK_LENGTH = float(os.getenv("GF_PATH_CHUNK_LENGTH", "4.0"))
MAX_PATH_CHUNKS = int(os.getenv("GF_MAX_PATH_CHUNKS", "5000"))
FUNCTIONAL_REL_TOL = float(os.getenv("GF_FUNCTIONAL_REL_TOL", "1e-6"))

# Random affine series
AFFINE_REL_TOL = float(os.getenv("GF_AFFINE_REL_TOL", "1e-6"))
MAX_AFFINE_TERMS = int(os.getenv("GF_MAX_AFFINE_TERMS", "100000"))

# Statistical checks
SE_MULTIPLIER = float(os.getenv("GF_SE_MULTIPLIER", "3.0"))
KS_PVALUE_MIN = float(os.getenv("GF_KS_PVALUE_MIN", "0.01"))
HILL_K_FRACS = _float_list(os.getenv("GF_HILL_K_FRACS", "0.005,0.01,0.02,0.05"))
HILL_DEFAULT_K_FRAC = float(os.getenv("GF_HILL_DEFAULT_K_FRAC", "0.01"))
BOOTSTRAP_RESAMPLES = int(os.getenv("GF_BOOTSTRAP_RESAMPLES", "500"))
TAIL_REL_TOL = float(os.getenv("GF_TAIL_REL_TOL", "0.15"))
MIN_TAIL_SAMPLES = int(os.getenv("GF_MIN_TAIL_SAMPLES", "10000"))
MIN_TAIL_VERIFY_SAMPLES = int(os.getenv("GF_MIN_TAIL_VERIFY_SAMPLES", "100000"))
MOMENT_BLOWUP_FACTOR = float(os.getenv("GF_MOMENT_BLOWUP_FACTOR", "1.5"))

# Population dynamics
POP_MIN_ITERATIONS = int(os.getenv("GF_POP_MIN_ITERATIONS", "5"))
POP_QUANTILE_REL_TOL = float(os.getenv("GF_POP_QUANTILE_REL_TOL", "0.01"))

# Project paths
BASE_DIR = Path(__file__).parent.parent
RESULTS_DIR = Path(os.getenv("GF_RESULTS_DIR", str(BASE_DIR / "results")))
LOGS_DIR = Path(os.getenv("GF_LOGS_DIR", str(BASE_DIR / "logs")))
DOCS_DIR = BASE_DIR / "docs"
MAP_SPEC_SCHEMA = DOCS_DIR / "map_spec.schema.json"

# Ensure directories exist
LOGS_DIR.mkdir(parents=True, exist_ok=True)
