"""Scaled interpolated chains and fluid-limit ensemble experiments.

A trajectory started at r*x becomes the process eta(t) = Phi_{floor(t * r^(1+alpha))} / r
(step mode) or its polygonal interpolation.  Ensembles over (r, replica)
measure the uniform distance to the limiting ODE flow, the stability
frequency P(inf |eta| <= rho |x|), and the inward stopping time sigma.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import ChainConfig, DEFAULT_STEP_CAP, Trajectory, simulate
from .densities import TargetDensity
from .drift import make_h_field
from .errors import CoverageError, InvalidArgumentError
from .flow import FluidPath, branch_flow, integrate_flow, _in_diagonal_band
from .proposals import Proposal
from .seeding import mix64
from ._parallel import parallel_map

_ALPHA_TOL = 1e-12
SCALE_ROW_COLUMNS = ("r", "replica", "sup_dist", "hit_rho", "sigma_steps", "branch")


def scaled_path(traj: Trajectory, r: float, alpha: float,
                mode: str = "step", t_max: Optional[float] = None) -> FluidPath:
    """Rescale a trajectory from r*x into the fluid clock t = k / r^(1+alpha)."""
    if r <= 0:
        raise InvalidArgumentError("r must be positive")
    clock = r ** (1.0 + alpha)
    if t_max is not None:
        needed = int(math.ceil(t_max * clock))
        if traj.n_steps < needed:
            raise CoverageError(
                f"trajectory has {traj.n_steps} steps, needs {needed} "
                f"to cover t_max={t_max} at r={r}, alpha={alpha}")
    times = np.arange(traj.states.shape[0], dtype=np.float64) / clock
    return FluidPath(times=times, points=traj.states / r, mode=mode)


def sup_distance(a: FluidPath, b: FluidPath, t_max: float) -> float:
    """Maximum Euclidean distance over the merged time grid on [0, t_max]."""
    if not a.covers(t_max) or not b.covers(t_max):
        raise CoverageError(
            f"paths end at {a.t_end} and {b.t_end}, need {t_max}")
    grid = np.union1d(a.times[a.times <= t_max], b.times[b.times <= t_max])
    grid = np.union1d(grid, [0.0, t_max])
    diff = a.values_at(grid) - b.values_at(grid)
    return float(np.max(np.hypot(diff[:, 0], diff[:, 1])))


@dataclass(frozen=True)
class ScalingExperiment:
    density: TargetDensity
    proposal: Proposal
    x: tuple
    r_values: tuple
    alpha: float
    t_max: float
    eps: float = 0.1
    rho: float = 0.5
    replicas: int = 1
    base_seed: int = 0
    mode: str = "step"
    dt: float = 1e-3
    step_cap: int = DEFAULT_STEP_CAP

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.shape != (2,) or not np.all(np.isfinite(x)) or np.hypot(*x) == 0:
            raise InvalidArgumentError("x must be a finite nonzero 2-d point")
        object.__setattr__(self, "x", (float(x[0]), float(x[1])))
        rv = tuple(float(r) for r in self.r_values)
        if not rv or any(r <= 0 for r in rv):
            raise InvalidArgumentError("r_values must be positive reals")
        object.__setattr__(self, "r_values", rv)
        beta = self.density.beta
        if self.alpha < 0 or self.alpha > beta + _ALPHA_TOL:
            raise InvalidArgumentError(
                f"alpha={self.alpha} outside [0, beta={beta}]")
        if self.replicas < 1:
            raise InvalidArgumentError("replicas must be >= 1")
        if not (0.0 < self.rho < 1.0):
            raise InvalidArgumentError("rho must be in (0, 1)")
        if self.t_max <= 0 or self.eps <= 0:
            raise InvalidArgumentError("t_max and eps must be positive")
        if self.mode not in ("step", "polygonal"):
            raise InvalidArgumentError(f"unknown mode {self.mode!r}")

    @property
    def nontrivial(self) -> bool:
        """True when alpha matches beta, the clock with a nontrivial limit."""
        return bool(abs(self.alpha - self.density.beta) <= _ALPHA_TOL)


def reference_paths(exp: ScalingExperiment):
    """Limit paths the scaled chains are compared to: the h-field flow at
    the critical clock (two branches for diagonal mixture starts), the
    constant path below it."""
    x = np.asarray(exp.x)
    if not exp.nontrivial:
        times = np.array([0.0, exp.t_max])
        pts = np.array([x, x])
        return [(".", FluidPath(times=times, points=pts, mode="polygonal"))]
    field = make_h_field(exp.density, exp.proposal)
    if exp.density.has_cone_exclusion and _in_diagonal_band(x):
        plus, minus = branch_flow(field, x, exp.dt, exp.t_max)
        return [("+", plus), ("-", minus)]
    return [(".", integrate_flow(field, x, exp.dt, exp.t_max))]


def _kappa_post(states: np.ndarray, v_star: np.ndarray,
                sep: float, disp: float, inner: float):
    """First hitting indices of the three mixture clocks, from stored states."""
    proj = np.abs(states @ v_star)
    d = states - states[0]
    dist = np.hypot(d[:, 0], d[:, 1])
    norms = np.hypot(states[:, 0], states[:, 1])

    def first(mask):
        idx = np.nonzero(mask)[0]
        return int(idx[0]) if idx.size else None

    k1 = first(proj >= sep)
    k2 = first(dist >= disp)
    k3 = first(norms < inner)
    return k1, k2, k3


def ensemble_experiment(exp: ScalingExperiment, threads: Optional[int] = None) -> "ScalingReport":
    """Simulate the (r, replica) grid and report distances and stability.

    Diagonal mixture starts are compared against both branch flows; the
    per-replica distance is the branch minimum and the argmin is tagged.
    Cells whose step budget exceeds the cap are skipped and flagged
    incomplete instead of aborting the report.
    """
    refs = reference_paths(exp)
    x = np.asarray(exp.x)
    x_norm = float(np.hypot(*x))
    diagonal_run = exp.density.has_cone_exclusion and _in_diagonal_band(x)
    v_star = None
    if diagonal_run:
        u = x / x_norm
        v_star = np.array([-u[1], u[0]])

    cells = []
    for i, r in enumerate(exp.r_values):
        n_steps = int(math.ceil(exp.t_max * r ** (1.0 + exp.alpha)))
        cells.append((i, r, n_steps, n_steps <= exp.step_cap))

    def run_cell(cell):
        i, r, n_steps, ok = cell
        if not ok:
            return []
        rows = []
        for j in range(exp.replicas):
            seed = mix64(exp.base_seed, i * exp.replicas + j)
            cfg = ChainConfig(density=exp.density, proposal=exp.proposal,
                              x0=r * x, seed=seed, n_steps=n_steps,
                              step_cap=exp.step_cap)
            traj = simulate(cfg)
            path = scaled_path(traj, r, exp.alpha, exp.mode, t_max=exp.t_max)
            best = math.inf
            best_tag = "."
            for tag, ref in refs:
                d = sup_distance(path, ref, exp.t_max)
                if d < best:
                    best, best_tag = d, tag
            hit = path.first_passage_below(exp.rho * x_norm) is not None
            norms = np.hypot(traj.states[:, 0], traj.states[:, 1])
            sig_idx = np.nonzero(norms < exp.rho * norms[0])[0]
            sigma_steps = int(sig_idx[0]) if sig_idx.size else None
            row = {"r": r, "replica": j, "sup_dist": best, "hit_rho": hit,
                   "sigma_steps": sigma_steps, "branch": best_tag}
            if diagonal_run:
                r0 = norms[0]
                k1, k2, k3 = _kappa_post(traj.states, v_star,
                                         sep=0.5 * r0, disp=0.5 * r0,
                                         inner=exp.rho * r0)
                row["kappa1"], row["kappa2"], row["kappa3"] = k1, k2, k3
            rows.append(row)
        return rows

    results = parallel_map(run_cell, cells, threads)
    rows = [row for cell_rows in results for row in cell_rows]

    aggregates = []
    for (i, r, n_steps, ok), cell_rows in zip(cells, results):
        agg = {"r": r, "n_steps": n_steps, "completed": bool(ok)}
        if ok:
            n = len(cell_rows)
            sup = np.array([row["sup_dist"] for row in cell_rows])
            hits = np.array([row["hit_rho"] for row in cell_rows], dtype=float)
            p_eps = float(np.mean(sup >= exp.eps))
            p_hit = float(np.mean(hits))
            agg.update({
                "replicas": n,
                "p_sup_ge_eps": p_eps,
                "p_sup_ge_eps_se": math.sqrt(p_eps * (1.0 - p_eps) / n),
                "p_hit_rho": p_hit,
                "p_hit_rho_se": math.sqrt(p_hit * (1.0 - p_hit) / n),
                "median_sup_dist": float(np.median(sup)),
            })
            if diagonal_run:
                for tag in ("+", "-"):
                    frac = sum(1 for row in cell_rows if row["branch"] == tag) / n
                    key = "plus" if tag == "+" else "minus"
                    agg[f"branch_{key}_frac"] = frac
        aggregates.append(agg)

    return ScalingReport(rows=rows, aggregates=aggregates,
                         config=_config_echo(exp), base_seed=exp.base_seed)


def _config_echo(exp: ScalingExperiment) -> dict:
    return {
        "density": exp.density.key,
        "density_params": {k: v for k, v in sorted(exp.density.params.items())},
        "proposal": exp.proposal.base,
        "x": list(exp.x),
        "r_values": list(exp.r_values),
        "alpha": exp.alpha,
        "t_max": exp.t_max,
        "eps": exp.eps,
        "rho": exp.rho,
        "replicas": exp.replicas,
        "mode": exp.mode,
        "dt": exp.dt,
    }


@dataclass
class ScalingReport:
    rows: list
    aggregates: list
    config: dict
    base_seed: int

    def to_json(self) -> str:
        payload = {"config": self.config, "base_seed": self.base_seed,
                   "aggregates": self.aggregates}
        return json.dumps(payload, sort_keys=True, indent=2)

    def row_records(self):
        for row in self.rows:
            yield {
                "r": row["r"],
                "replica": row["replica"],
                "sup_dist": row["sup_dist"],
                "hit_rho": int(row["hit_rho"]),
                "sigma_steps": "" if row["sigma_steps"] is None else row["sigma_steps"],
                "branch": row["branch"],
            }
