"""Backend facade over the hot loops in _impl.

FLUIDCHAIN_NUMBA=0 selects the pure-Python/numpy path; anything else (the
default) compiles the loops with numba.  ``backend()`` reports which path
is live.  Batch log-density evaluation uses the compiled loop under numba
and the vectorized numpy twin otherwise, so both modes stay fast enough
for Monte Carlo field estimation.
"""

import numpy as np

from . import _impl, _vec

USE_NUMBA = _impl.USE_NUMBA

chain_run = _impl.chain_run
chain_until_level = _impl.chain_until_level
chain_exit_times = _impl.chain_exit_times
logpi_scalar = _impl.logpi_scalar


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def logpi_batch(code, params, xy, out=None):
    """Log density at each row of xy, shape (n, 2) -> (n,)."""
    xy = np.ascontiguousarray(xy, dtype=np.float64)
    if USE_NUMBA:
        if out is None:
            out = np.empty(xy.shape[0])
        _impl.logpi_batch(code, params, xy, out)
        return out
    return _vec.logpi_batch(code, params, xy, out)
