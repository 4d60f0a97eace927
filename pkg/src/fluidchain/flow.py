"""Fluid-limit ODE integration with origin absorption and diagonal branching.

The flow mu' = F(mu) is integrated with fixed-step RK4 plus event-triggered
step halving: whenever the proposed displacement |F| * dt exceeds half the
current radius the step is halved, which resolves the subexponential
blow-up |F| ~ |mu|^(-beta) near the origin.  Once |mu| <= eps_stop the
state is clamped to exactly 0 and the time recorded as absorbed_at; the
continued solution stays at 0 (the ODE solutions reach the origin in
finite time, so a numerical clamp realizes their continuation).

Mixture fields are undefined on the diagonals |x1| = |x2|.  Free fields
refuse an angular band of half-width CONE_BAND_RAD around them; flows
started on a diagonal must use branch_flow, which integrates the two
side-locked fields from symmetrically perturbed starts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .drift import VectorField
from .errors import (CoverageError, InvalidArgumentError, NumericError,
                     StiffnessError)
from ._parallel import parallel_map

EPS_STOP = 1e-6          # absorption radius for the origin clamp
CONE_BAND_RAD = 1e-6     # angular half-width of the diagonal refusal band
PERTURB_REL = 1e-8       # relative offset of diagonal-branch starts
_DT_MIN_FACTOR = 2.0 ** -40


@dataclass
class FluidPath:
    """A time-stamped planar path: ODE flow or scaled chain.

    mode "polygonal" evaluates by linear interpolation, "step" as a
    right-continuous piecewise-constant path (the raw interpolated-chain
    convention).  Grid values are exact in both modes.
    """

    times: np.ndarray
    points: np.ndarray
    mode: str = "polygonal"
    absorbed_at: Optional[float] = None
    cone_exit_at: Optional[float] = None
    branch_tag: Optional[str] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.times.ndim != 1 or self.points.shape != (self.times.size, 2):
            raise InvalidArgumentError("times (k,) and points (k, 2) must match")
        if self.times.size and (np.diff(self.times) <= 0).any():
            raise InvalidArgumentError("times must be strictly increasing")
        if self.mode not in ("polygonal", "step"):
            raise InvalidArgumentError(f"unknown path mode {self.mode!r}")

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def covers(self, t_max: float) -> bool:
        return self.t_end >= t_max - 1e-12

    def values_at(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
        if self.mode == "polygonal":
            out = np.column_stack([
                np.interp(ts, self.times, self.points[:, 0]),
                np.interp(ts, self.times, self.points[:, 1]),
            ])
        else:
            idx = np.searchsorted(self.times, ts, side="right") - 1
            idx = np.clip(idx, 0, self.times.size - 1)
            out = self.points[idx]
        return out

    def value_at(self, t: float) -> np.ndarray:
        return self.values_at([t])[0]

    def norms(self) -> np.ndarray:
        return np.hypot(self.points[:, 0], self.points[:, 1])

    def first_passage_below(self, level: float) -> Optional[float]:
        """First time |path| <= level; linearly interpolated for polygonal
        paths, the grid time itself for step paths.  None if never."""
        n = self.norms()
        hits = np.nonzero(n <= level)[0]
        if hits.size == 0:
            return None
        i = int(hits[0])
        if i == 0 or self.mode == "step":
            return float(self.times[i])
        t0, t1 = self.times[i - 1], self.times[i]
        n0, n1 = n[i - 1], n[i]
        if n0 == n1:
            return float(t1)
        return float(t0 + (n0 - level) * (t1 - t0) / (n0 - n1))


class _NearZero(Exception):
    pass


class _BandHit(Exception):
    pass


def _in_diagonal_band(p, band=CONE_BAND_RAD) -> bool:
    theta = np.arctan2(abs(p[1]), abs(p[0]))
    return abs(theta - 0.25 * np.pi) <= band


def integrate_flow(field: VectorField, x0, dt: float, t_max: float,
                   eps_stop: float = EPS_STOP) -> FluidPath:
    """RK4-integrate the field from x0 over [0, t_max].

    The final step is truncated to land exactly on t_max.  Absorption
    clamps the state to 0; free mixture fields additionally stop with a
    cone-exit marker when the state enters the diagonal band.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (2,) or not np.all(np.isfinite(x0)):
        raise InvalidArgumentError("x0 must be a finite 2-d point")
    r0 = float(np.hypot(x0[0], x0[1]))
    if r0 <= eps_stop:
        raise InvalidArgumentError("x0 must lie outside the absorption radius")
    if dt <= 0 or t_max <= 0:
        raise InvalidArgumentError("dt and t_max must be positive")
    band_guard = field.lock_side == 0 and field.density.has_cone_exclusion
    if band_guard and _in_diagonal_band(x0):
        raise InvalidArgumentError(
            "x0 lies on a mixture diagonal; integrate with branch_flow")

    def f(p):
        if np.hypot(p[0], p[1]) <= eps_stop:
            raise _NearZero
        if band_guard and _in_diagonal_band(p):
            raise _BandHit
        return field(p)

    dt_min = dt * _DT_MIN_FACTOR
    eps_t = 8.0 * np.finfo(np.float64).eps
    times = [0.0]
    pts = [x0.copy()]
    t = 0.0
    x = x0.copy()
    absorbed_at = None
    cone_exit_at = None
    max_nodes = 16 * int(np.ceil(t_max / dt)) + 100_000

    while t < t_max - 1e-15:
        fx = f(x)
        speed = float(np.hypot(fx[0], fx[1]))
        dt_eff = min(dt, t_max - t)
        radius = float(np.hypot(x[0], x[1]))
        while speed * dt_eff > 0.45 * radius and dt_eff > dt_min:
            dt_eff *= 0.5
        # halving below one time ulp cannot advance t: declare the event
        dt_floor = max(dt_min, eps_t * max(t, 1.0))
        saw_band = False
        saw_zero = False
        while True:
            try:
                k1 = fx
                k2 = f(x + 0.5 * dt_eff * k1)
                k3 = f(x + 0.5 * dt_eff * k2)
                k4 = f(x + dt_eff * k3)
                xn = x + (dt_eff / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not np.all(np.isfinite(xn)):
                    raise _NearZero
                break
            except _NearZero:
                saw_zero = True
                dt_eff *= 0.5
                if dt_eff < dt_floor:
                    absorbed_at = t
                    break
            except _BandHit:
                saw_band = True
                dt_eff *= 0.5
                if dt_eff < dt_floor:
                    cone_exit_at = t
                    break
        if absorbed_at is not None or cone_exit_at is not None:
            break
        if (saw_band or saw_zero) and np.array_equal(xn, x):
            # the displacement underflowed at the state's own ulp, so no
            # further halving can move x; resolve the boundary that forced
            # the halving instead of spinning on zero-length nodes
            if saw_band:
                cone_exit_at = t
            else:
                absorbed_at = t
            break
        if t + dt_eff <= t:
            absorbed_at = t
            break
        t += dt_eff
        x = xn
        times.append(t)
        pts.append(x.copy())
        if np.hypot(x[0], x[1]) <= eps_stop:
            absorbed_at = t
            break
        if band_guard and _in_diagonal_band(x):
            cone_exit_at = t
            break
        if len(times) > max_nodes:
            raise StiffnessError(
                f"step control stalled near t={t} at state {tuple(x)}")

    if absorbed_at is not None:
        pts[-1] = np.zeros(2)
        if t_max > absorbed_at:
            times.append(t_max)
            pts.append(np.zeros(2))
    return FluidPath(times=np.array(times), points=np.array(pts),
                     mode="polygonal", absorbed_at=absorbed_at,
                     cone_exit_at=cone_exit_at)


def closed_form_flow(example: str, x0, sigma: float, t: float,
                     delta: float = 0.4) -> np.ndarray:
    """Exact flow solutions for the two wedge densities (clamped past
    absorption)."""
    if t < 0:
        raise InvalidArgumentError("t must be nonnegative")
    x0 = np.asarray(x0, dtype=np.float64)
    r = float(np.hypot(x0[0], x0[1]))
    if r == 0.0:
        return np.zeros(2)
    n = x0 / r
    if example == "wedge-super":
        rem = r - sigma * t / np.sqrt(2.0 * np.pi)
        return rem * n if rem > 0 else np.zeros(2)
    if example == "wedge-weibull":
        e = 2.0 * (1.0 - delta)
        u = r ** e - 2.0 * sigma * sigma * delta * (1.0 - delta) * t
        return u ** (1.0 / e) * n if u > 0 else np.zeros(2)
    raise InvalidArgumentError(f"no closed form for example {example!r}")


def closed_absorption_time(example: str, x0, sigma: float,
                           delta: float = 0.4) -> float:
    x0 = np.asarray(x0, dtype=np.float64)
    r = float(np.hypot(x0[0], x0[1]))
    if example == "wedge-super":
        return np.sqrt(2.0 * np.pi) * r / sigma
    if example == "wedge-weibull":
        e = 2.0 * (1.0 - delta)
        return r ** e / (2.0 * sigma * sigma * delta * (1.0 - delta))
    raise InvalidArgumentError(f"no closed form for example {example!r}")


def branch_flow(field: VectorField, x0, dt: float, t_max: float):
    """Integrate both diagonal branches from a mixture-diagonal start.

    Starts are x0 +/- perturb * v_perp with v_perp the unit normal to the
    diagonal; each branch uses the limiting field of the half-plane its
    start falls in.  Returns (plus, minus) FluidPaths.
    """
    if not field.density.has_cone_exclusion:
        raise InvalidArgumentError("branch_flow requires a mixture density")
    x0 = np.asarray(x0, dtype=np.float64)
    r0 = float(np.hypot(x0[0], x0[1]))
    if r0 == 0.0:
        raise InvalidArgumentError("x0 must be nonzero")
    if not _in_diagonal_band(x0):
        raise InvalidArgumentError(
            f"x0={tuple(x0)} is not on a mixture diagonal")
    u = x0 / r0
    v_perp = np.array([-u[1], u[0]])
    eps = PERTURB_REL * r0

    paths = []
    for sign, tag in ((1.0, "plus"), (-1.0, "minus")):
        start = x0 + sign * eps * v_perp
        side = 1 if abs(start[0]) > abs(start[1]) else -1
        locked = field.with_lock(side)
        path = integrate_flow(locked, start, dt, t_max)
        path.branch_tag = tag
        paths.append(path)

    # Degenerate geometry guard: both branches must move off the diagonal.
    def _diag_dist(p):
        return abs(abs(p[0]) - abs(p[1]))

    escapes = []
    for path in paths:
        if path.points.shape[0] < 2:
            escapes.append(False)
        else:
            escapes.append(_diag_dist(path.points[1]) > _diag_dist(path.points[0]))
    if not any(escapes):
        raise NumericError("both branches immediately re-enter the diagonal band")
    return paths[0], paths[1]


@dataclass
class SweepResult:
    all_hit: bool
    worst_time: float
    rows: list


def stability_sweep(field: VectorField, n_directions: int, rho: float,
                    t_max: float, dt: float = 1e-3,
                    threads: int = 1) -> SweepResult:
    """First-passage times below rho from equally spaced unit starts.

    Diagonal directions of mixture fields are branched; both branches must
    pass.  Directions that never reach rho within t_max are reported with
    hit=False (they make all_hit False rather than raising).
    """
    if n_directions < 8:
        raise InvalidArgumentError("n_directions must be >= 8")
    if not (0.0 < rho < 1.0):
        raise InvalidArgumentError("rho must be in (0, 1)")
    angles = [2.0 * np.pi * j / n_directions for j in range(n_directions)]
    band_guard = field.lock_side == 0 and field.density.has_cone_exclusion

    def work(angle):
        x = np.array([np.cos(angle), np.sin(angle)])
        rows = []
        if band_guard and _in_diagonal_band(x):
            plus, minus = branch_flow(field, x, dt, t_max)
            for path, tag in ((plus, "+"), (minus, "-")):
                t_hit = path.first_passage_below(rho)
                rows.append({"angle": float(angle), "hit": t_hit is not None,
                             "time": float(t_hit) if t_hit is not None else float("nan"),
                             "branch": tag})
        else:
            path = integrate_flow(field, x, dt, t_max)
            t_hit = path.first_passage_below(rho)
            rows.append({"angle": float(angle), "hit": t_hit is not None,
                         "time": float(t_hit) if t_hit is not None else float("nan"),
                         "branch": "."})
        return rows

    all_rows = [row for rows in parallel_map(work, angles, threads) for row in rows]
    all_hit = all(r["hit"] for r in all_rows)
    times = [r["time"] for r in all_rows if r["hit"]]
    worst = max(times) if all_hit and times else float("nan")
    return SweepResult(all_hit=all_hit, worst_time=worst, rows=all_rows)
