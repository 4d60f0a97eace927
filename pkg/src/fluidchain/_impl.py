"""Hot inner loops: scalar log-densities and chain drivers.

Everything here is written in loop style so the whole module can run under
numba's nopython mode.  When FLUIDCHAIN_NUMBA is unset or "1" every public
function below is compiled with @njit(cache=True, nogil=True); setting
FLUIDCHAIN_NUMBA=0 leaves them as plain Python (same semantics, slower).
The original Python callables stay reachable through ``.py_func`` on the
compiled dispatchers, which is what the backend benchmark compares.

Density codes (params layout):
  0  wedge polynomial-shoulder Gaussian      ()
  1  two-component Gaussian mixture          (a2, log_w1, log_w2)
  2  wedge Weibull-tail                      (delta,)
  3  two-component Weibull-tail mixture      (delta, a2, log_w1, log_w2)

Chain kernels consume pre-drawn increment and log-uniform arrays so that
the numba and plain-Python paths are statistically identical and every
run is reproducible from its seed alone.
"""

import os

import numpy as np

_flag = os.environ.get("FLUIDCHAIN_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "off", "no")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if USE_NUMBA:
    def _compile(fn):
        return njit(cache=True, nogil=True)(fn)
else:
    def _compile(fn):
        return fn


@_compile
def logpi_scalar(code, params, x1, x2):
    """Unnormalized log density at (x1, x2) for the coded target.

    Returns +inf on the Weibull-mixture singularity at the origin and can
    return non-finite values on absurd overflow inputs; chain kernels treat
    any non-finite proposal value as a rejection.
    """
    r2 = x1 * x1 + x2 * x2
    if code == 0:
        x1sq = x1 * x1
        g = 1.0 + r2 + x1sq * x1sq * x1sq * x1sq * x2 * x2
        return np.log(g) - r2
    elif code == 1:
        a2 = params[0]
        t1 = params[1] - 0.5 * (a2 * x1 * x1 + x2 * x2)
        t2 = params[2] - 0.5 * (x1 * x1 + a2 * x2 * x2)
        if t1 >= t2:
            return t1 + np.log1p(np.exp(t2 - t1))
        return t2 + np.log1p(np.exp(t1 - t2))
    elif code == 2:
        delta = params[0]
        x1sq = x1 * x1
        g = 1.0 + r2 + x1sq * x1sq * x1sq * x1sq * x2 * x2
        return delta * np.log(g) - r2 ** delta
    else:
        delta = params[0]
        a2 = params[1]
        q1 = a2 * x1 * x1 + x2 * x2
        q2 = x1 * x1 + a2 * x2 * x2
        if q1 == 0.0 or q2 == 0.0:
            return np.inf
        t1 = params[2] + (delta - 1.0) * np.log(q1) - 0.5 * q1 ** delta
        t2 = params[3] + (delta - 1.0) * np.log(q2) - 0.5 * q2 ** delta
        if t1 >= t2:
            return t1 + np.log1p(np.exp(t2 - t1))
        return t2 + np.log1p(np.exp(t1 - t2))


@_compile
def logpi_batch(code, params, xy, out):
    for i in range(xy.shape[0]):
        out[i] = logpi_scalar(code, params, xy[i, 0], xy[i, 1])


@_compile
def chain_run(code, params, x01, x02, incs, log_us, states, accepted):
    """Metropolis chain with symmetric pre-drawn increments.

    states has shape (n+1, 2) and accepted has shape (n,); both are filled
    in place.  A proposal is accepted iff log u < logpi(prop) - logpi(cur);
    proposals with non-finite log density are rejected and counted in the
    returned warning total.
    """
    n = incs.shape[0]
    cur1 = x01
    cur2 = x02
    lp_cur = logpi_scalar(code, params, cur1, cur2)
    warn = 0
    states[0, 0] = cur1
    states[0, 1] = cur2
    for k in range(n):
        p1 = cur1 + incs[k, 0]
        p2 = cur2 + incs[k, 1]
        lp_prop = logpi_scalar(code, params, p1, p2)
        ok = np.isfinite(lp_prop)
        if ok and log_us[k] < lp_prop - lp_cur:
            cur1 = p1
            cur2 = p2
            lp_cur = lp_prop
            accepted[k] = 1
        else:
            accepted[k] = 0
            if not ok:
                warn += 1
        states[k + 1, 0] = cur1
        states[k + 1, 1] = cur2
    return warn


@_compile
def chain_until_level(code, params, x01, x02, incs, log_us, level, p_exp):
    """Run until the chain norm first drops below ``level`` or the budget ends.

    Returns (sigma, x1, x2, moment_sum, warn) where sigma is the first index
    k >= 1 with |state_k| < level (-1 if never within the budget), (x1, x2)
    is the state at the truncated stopping time min(sigma, budget), and
    moment_sum = sum_{k < min(sigma, budget)} |state_k|^p_exp.
    """
    budget = incs.shape[0]
    cur1 = x01
    cur2 = x02
    lp_cur = logpi_scalar(code, params, cur1, cur2)
    warn = 0
    sigma = -1
    moment = 0.0
    if np.sqrt(cur1 * cur1 + cur2 * cur2) < level:
        return 0, cur1, cur2, 0.0, 0
    for k in range(budget):
        moment += (cur1 * cur1 + cur2 * cur2) ** (0.5 * p_exp)
        p1 = cur1 + incs[k, 0]
        p2 = cur2 + incs[k, 1]
        lp_prop = logpi_scalar(code, params, p1, p2)
        ok = np.isfinite(lp_prop)
        if ok and log_us[k] < lp_prop - lp_cur:
            cur1 = p1
            cur2 = p2
            lp_cur = lp_prop
        elif not ok:
            warn += 1
        if np.sqrt(cur1 * cur1 + cur2 * cur2) < level:
            sigma = k + 1
            break
    return sigma, cur1, cur2, moment, warn


@_compile
def chain_exit_times(code, params, x01, x02, incs, log_us,
                     v1, v2, thresh_sep, thresh_disp, thresh_inner):
    """First-passage step counts for the three diagonal-escape clocks.

    Clock 1: |<v, state>| >= thresh_sep, clock 2: |state - state_0| >=
    thresh_disp, clock 3: |state| < thresh_inner.  Returns (k1, k2, k3,
    warn) with -1 for clocks that never fire within the budget.
    """
    budget = incs.shape[0]
    cur1 = x01
    cur2 = x02
    lp_cur = logpi_scalar(code, params, cur1, cur2)
    warn = 0
    k1 = -1
    k2 = -1
    k3 = -1
    if np.abs(v1 * cur1 + v2 * cur2) >= thresh_sep:
        k1 = 0
    if thresh_disp <= 0.0:
        k2 = 0
    if np.sqrt(cur1 * cur1 + cur2 * cur2) < thresh_inner:
        k3 = 0
    if k1 >= 0 and k2 >= 0 and k3 >= 0:
        return k1, k2, k3, 0
    for k in range(budget):
        p1 = cur1 + incs[k, 0]
        p2 = cur2 + incs[k, 1]
        lp_prop = logpi_scalar(code, params, p1, p2)
        ok = np.isfinite(lp_prop)
        if ok and log_us[k] < lp_prop - lp_cur:
            cur1 = p1
            cur2 = p2
            lp_cur = lp_prop
        elif not ok:
            warn += 1
        if k1 < 0 and np.abs(v1 * cur1 + v2 * cur2) >= thresh_sep:
            k1 = k + 1
        d1 = cur1 - x01
        d2 = cur2 - x02
        if k2 < 0 and np.sqrt(d1 * d1 + d2 * d2) >= thresh_disp:
            k2 = k + 1
        if k3 < 0 and np.sqrt(cur1 * cur1 + cur2 * cur2) < thresh_inner:
            k3 = k + 1
        if k1 >= 0 and k2 >= 0 and k3 >= 0:
            break
    return k1, k2, k3, warn
