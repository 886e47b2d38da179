"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``PERISAT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
riccati_period = _kernels_py.riccati_period
linear_rk4 = _kernels_py.linear_rk4

if os.environ.get("PERISAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "compiled"
        riccati_period = _kernels.riccati_period
        linear_rk4 = _kernels.linear_rk4
