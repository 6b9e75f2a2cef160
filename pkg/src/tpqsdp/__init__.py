"""Desk-scale simulator and analysis toolkit for a TPQ-state SDP solver."""

import os as _os

# Determinism contract: numerical output may not depend on BLAS threading.
# setdefault only, so explicitly configured environments win.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
    _os.environ.setdefault(_var, "1")

__version__ = "0.1.0"

from . import (clifford, exactspec, hamlearn, krylov, mmw, operators, polyqet,
               resources, tpq)

__all__ = [
    "__version__", "clifford", "exactspec", "hamlearn", "krylov", "mmw",
    "operators", "polyqet", "resources", "tpq",
]
