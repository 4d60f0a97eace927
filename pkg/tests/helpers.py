"""Small numeric helpers shared across test modules."""
from __future__ import annotations

import numpy as np

from fluidchain import make_density, make_proposal

# One representative parameterization per target family.
DENSITY_PARAMS = {
    "wedge-super": {},
    "gauss-mixture": {"a": 4.0, "alpha": 0.5},
    "wedge-weibull": {"delta": 0.4},
    "weibull-mixture": {"delta": 0.4, "a": 4.0, "alpha": 0.5},
}

DENSITY_KEYS_ORDERED = tuple(DENSITY_PARAMS)


def build_density(key):
    return make_density(key, **DENSITY_PARAMS[key])


def build_proposal(key, **kw):
    return make_proposal(key, **kw)


def fd_grad(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function on R^2."""
    x = np.asarray(x, dtype=float)
    g = np.empty(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def random_off_cone_points(rng, n, lo=0.5, hi=50.0, min_angle=0.05):
    """Random points with |x| in [lo, hi], at least min_angle radians off
    both diagonals (and therefore off the origin and the singular cone)."""
    pts = np.empty((n, 2))
    k = 0
    while k < n:
        theta = rng.uniform(0.0, 2.0 * np.pi)
        # distance to the nearest diagonal direction {pi/4 + j*pi/2}
        d = np.abs((theta - np.pi / 4.0) % (np.pi / 2.0) - np.pi / 4.0)
        if d < min_angle:
            continue
        r = rng.uniform(lo, hi)
        pts[k] = (r * np.cos(theta), r * np.sin(theta))
        k += 1
    return pts


def norm_rows(a):
    return np.hypot(a[..., 0], a[..., 1])
