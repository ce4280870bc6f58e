"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded.  Set ``LANDAU_ORDER_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py as python_impl

try:
    if os.environ.get("LANDAU_ORDER_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend forced")
    from . import _kernels as compiled_impl
except ImportError:
    compiled_impl = None

BACKEND = "cython" if compiled_impl is not None else "python"
_impl = compiled_impl if compiled_impl is not None else python_impl


def chain_sum(r, z, period, nucleus_charge, ball_charge, ball_radius, ball_offset,
              log_coef, tol, n_max):
    r = np.ascontiguousarray(r, dtype=np.float64).ravel()
    z = np.ascontiguousarray(z, dtype=np.float64).ravel()
    return _impl.chain_sum(r, z, float(period), float(nucleus_charge), float(ball_charge),
                           float(ball_radius), float(ball_offset), float(log_coef),
                           float(tol), int(n_max))
