import os

# finite differences
FD_STEP = 1e-5

# geodesic and kernel flow integration
DEFAULT_STEP = 1e-3
DEFAULT_SMAX = 2.0 * 3.141592653589793

# unit norm and orthogonality tolerance of constructed values
UNIT_TOL = 1e-10

# |u x w| below this makes u and w colinear in the preimage construction
COLINEAR_TOL = 1e-12

# componentwise comparison of orbit elements
LEX_TOL = 1e-12

# grid of the canonical orbit representative
CLASS_GRID = 1e-8

# singular values below this count as rank loss
RANK_TOL = 1e-6

DEFAULT_SEED = 0

THREADS_ENV = "NULLGEO_THREADS"


def worker_count() -> int:
    """
    | Number of workers for sweeps, read from NULLGEO_THREADS. Defaults to 1 when unset.

    :return: positive worker count.
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got '{raw}'")
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {n}")
    return n
