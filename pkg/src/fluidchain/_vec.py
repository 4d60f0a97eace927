"""Vectorized numpy twins of the scalar log-densities in _impl.

Used as the batch evaluation path when numba is disabled and as an
independent implementation in backend-agreement tests.
"""

import numpy as np


def logpi_batch(code, params, xy, out=None):
    x1 = xy[:, 0]
    x2 = xy[:, 1]
    if out is None:
        out = np.empty(xy.shape[0])
    r2 = x1 * x1 + x2 * x2
    if code == 0:
        g = 1.0 + r2 + x1 ** 8 * x2 ** 2
        out[:] = np.log(g) - r2
    elif code == 1:
        a2 = params[0]
        t1 = params[1] - 0.5 * (a2 * x1 * x1 + x2 * x2)
        t2 = params[2] - 0.5 * (x1 * x1 + a2 * x2 * x2)
        out[:] = np.logaddexp(t1, t2)
    elif code == 2:
        delta = params[0]
        g = 1.0 + r2 + x1 ** 8 * x2 ** 2
        out[:] = delta * np.log(g) - r2 ** delta
    else:
        delta = params[0]
        a2 = params[1]
        q1 = a2 * x1 * x1 + x2 * x2
        q2 = x1 * x1 + a2 * x2 * x2
        with np.errstate(divide="ignore"):
            t1 = params[2] + (delta - 1.0) * np.log(q1) - 0.5 * q1 ** delta
            t2 = params[3] + (delta - 1.0) * np.log(q2) - 0.5 * q2 ** delta
        out[:] = np.logaddexp(t1, t2)
        out[q1 == 0.0] = np.inf
        out[q2 == 0.0] = np.inf
    return out
