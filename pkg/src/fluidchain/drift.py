"""Drift-field estimation and the analytic limiting fields.

The one-step mean drift of the chain at x is

    Delta(x) = E_x[Phi_1 - Phi_0]
             = integral over the rejection region of y (pi(x+y)/pi(x) - 1) q(y) dy,

estimated here by Monte Carlo.  Its radial limit Delta_inf and the
ODE right-hand side h(x) = |x|^(-beta) Delta_inf(x) come in closed form
from the density's limiting direction field and the proposal moments:
superexponential targets use m1 * S l / |sqrt(S) l|, subexponential ones
m2 * S l, with S the proposal shape and l the limiting direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .chain import _draw_chain_randomness
from .densities import TargetDensity
from .errors import InvalidArgumentError, NumericError
from .proposals import Proposal
from .seeding import make_rng, mix64
from ._parallel import parallel_map

ESTIMATORS = ("rejection-integrand", "one-step-mean")


@dataclass(frozen=True)
class FieldEstimate:
    x: np.ndarray
    value: np.ndarray
    stderr: np.ndarray
    n_samples: int
    estimator: str


def delta_mc(density: TargetDensity, proposal: Proposal, x, n: int, seed: int,
             estimator: str = "rejection-integrand") -> FieldEstimate:
    """Monte Carlo estimate of the drift Delta(x) with per-coordinate stderr.

    "rejection-integrand" averages y (ratio - 1) over proposals that lower
    the density (zero weight elsewhere); "one-step-mean" averages actual
    one-step displacements.  Both are unbiased for the same vector.
    """
    if estimator not in ESTIMATORS:
        raise InvalidArgumentError(f"unknown estimator {estimator!r}")
    if n < 1000:
        raise InvalidArgumentError(f"n must be >= 1000, got {n}")
    x = np.asarray(x, dtype=np.float64)
    rng = make_rng(seed)
    incs, log_us = _draw_chain_randomness(proposal, rng, n)
    lp_x = float(density.log_density(x))
    lp_prop = density.log_density_batch(x[None, :] + incs)
    if np.isnan(lp_prop).all():
        raise NumericError(f"all density ratios non-finite at {tuple(x)}")
    diff = lp_prop - lp_x
    if estimator == "rejection-integrand":
        # expm1(diff) = ratio - 1 on the rejection side; weight 0 elsewhere
        # (including +inf diffs, which belong to the acceptance region).
        with np.errstate(invalid="ignore"):
            w = np.where(diff < 0.0, np.expm1(np.minimum(diff, 0.0)), 0.0)
        samples = incs * w[:, None]
    else:
        with np.errstate(invalid="ignore"):
            acc = np.isfinite(lp_prop) & (log_us < diff)
        samples = incs * acc[:, None].astype(np.float64)
    value = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(n)
    return FieldEstimate(x=x, value=value, stderr=stderr,
                         n_samples=n, estimator=estimator)


def delta_infinity(density: TargetDensity, proposal: Proposal, x,
                   lock_side: int = 0) -> np.ndarray:
    """The limiting drift field at x (requires x in the density's cone).

    ``lock_side`` forces the mixture half-space choice (+1: first
    coordinate dominant, -1: second) for branch integration off the
    diagonal; 0 derives the side from x and refuses diagonal points.
    """
    x = np.asarray(x, dtype=np.float64)
    ell = _ell(density, x, lock_side)
    s = proposal.sigma
    # spelled out instead of s @ ell: BLAS fuses one product per row,
    # which would break the exact swap symmetry of the mixture branches
    e0, e1 = float(ell[0]), float(ell[1])
    v = np.array([s[0, 0] * e0 + s[0, 1] * e1,
                  s[1, 0] * e0 + s[1, 1] * e1])
    if density.tail_class == "superexponential":
        denom = math.sqrt(float(v[0]) * e0 + float(v[1]) * e1)
        return proposal.m1 * v / denom
    return proposal.m2 * v


def h_field(density: TargetDensity, proposal: Proposal, x,
            lock_side: int = 0) -> np.ndarray:
    """ODE right-hand side |x|^(-beta) Delta_inf(x); equals Delta_inf when beta=0."""
    x = np.asarray(x, dtype=np.float64)
    d_inf = delta_infinity(density, proposal, x, lock_side)
    beta = density.beta
    if beta == 0.0:
        return d_inf
    return float(np.hypot(x[0], x[1])) ** (-beta) * d_inf


def _ell(density: TargetDensity, x, lock_side: int) -> np.ndarray:
    if lock_side == 0 or not density.has_cone_exclusion:
        return density.ell_infinity(x)
    return density.ell_infinity_sided(x, lock_side)


@dataclass
class VectorField:
    """Evaluatable limiting field tied to a density/proposal pair.

    kind "delta_infinity" or "h"; beta is the density's decay index.  When
    lock_side is nonzero the mixture half-space formula for that side is
    used everywhere (no cone refusal), which is what diagonal-branch
    integration needs.
    """

    kind: str
    density: TargetDensity
    proposal: Proposal
    lock_side: int = 0
    beta: float = dc_field(init=False)

    def __post_init__(self):
        if self.kind not in ("delta_infinity", "h"):
            raise InvalidArgumentError(f"unknown field kind {self.kind!r}")
        self.beta = self.density.beta
        # Orientation sanity: the built-in fields must point inward.
        for probe in self._probe_points():
            v = self(probe)
            n = probe / np.hypot(probe[0], probe[1])
            if not (float(v @ n) < 0.0):
                raise NumericError(
                    f"limiting field not inward-pointing at probe {tuple(probe)}"
                )

    def _probe_points(self):
        if self.lock_side == +1:
            return [np.array([2.0, 1.0]), np.array([-2.0, 1.0])]
        if self.lock_side == -1:
            return [np.array([1.0, 2.0]), np.array([1.0, -2.0])]
        if self.density.has_cone_exclusion:
            return [np.array([2.0, 1.0]), np.array([1.0, 2.0])]
        return [np.array([0.6, 0.8]), np.array([-1.0, 0.0])]

    def __call__(self, x) -> np.ndarray:
        if self.kind == "h":
            return h_field(self.density, self.proposal, x, self.lock_side)
        return delta_infinity(self.density, self.proposal, x, self.lock_side)

    def eval_batch(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        out = np.empty_like(xs)
        for i in range(xs.shape[0]):
            out[i] = self(xs[i])
        return out

    def in_domain(self, x) -> bool:
        if self.lock_side != 0:
            return bool(np.hypot(*np.asarray(x, dtype=np.float64)) > 0.0)
        return self.density.in_cone(x)

    def with_lock(self, side: int) -> "VectorField":
        return VectorField(kind=self.kind, density=self.density,
                           proposal=self.proposal, lock_side=side)


def make_h_field(density: TargetDensity, proposal: Proposal,
                 lock_side: int = 0) -> VectorField:
    return VectorField(kind="h", density=density, proposal=proposal,
                       lock_side=lock_side)


def make_delta_infinity_field(density: TargetDensity, proposal: Proposal,
                              lock_side: int = 0) -> VectorField:
    return VectorField(kind="delta_infinity", density=density,
                       proposal=proposal, lock_side=lock_side)


FIELD_GRID_COLUMNS = ("x1", "x2", "delta1", "delta2", "stderr1", "stderr2",
                      "dinf1", "dinf2", "h1", "h2", "in_cone")


def field_grid(density: TargetDensity, proposal: Proposal, region,
               nx: int, ny: int, n_mc: int, seed: int,
               estimator: str = "rejection-integrand",
               threads: int = 1) -> list[dict]:
    """Tabulate Delta-hat, Delta_inf and h over a rectangular grid.

    region = (xmin, xmax, ymin, ymax).  Rows are ordered with x1 varying
    fastest; each point gets an independent stream seeded by its index.
    Per-point failures are recorded as NaN columns, never raised.
    """
    xmin, xmax, ymin, ymax = (float(v) for v in region)
    if not (xmax >= xmin and ymax >= ymin) or nx < 1 or ny < 1:
        raise InvalidArgumentError("empty grid region")
    xs = np.linspace(xmin, xmax, nx)
    ys = np.linspace(ymin, ymax, ny)
    points = [(ix, iy) for iy in range(ny) for ix in range(nx)]

    def work(item):
        ix, iy = item
        idx = iy * nx + ix
        pt = np.array([xs[ix], ys[iy]])
        row = {"x1": float(pt[0]), "x2": float(pt[1])}
        try:
            est = delta_mc(density, proposal, pt, n_mc,
                           mix64(seed, idx), estimator)
            row.update(delta1=float(est.value[0]), delta2=float(est.value[1]),
                       stderr1=float(est.stderr[0]), stderr2=float(est.stderr[1]))
        except Exception:
            row.update(delta1=np.nan, delta2=np.nan,
                       stderr1=np.nan, stderr2=np.nan)
        if density.in_cone(pt):
            dinf = delta_infinity(density, proposal, pt)
            h = h_field(density, proposal, pt)
            row.update(dinf1=float(dinf[0]), dinf2=float(dinf[1]),
                       h1=float(h[0]), h2=float(h[1]), in_cone=True)
        else:
            row.update(dinf1=np.nan, dinf2=np.nan, h1=np.nan, h2=np.nan,
                       in_cone=False)
        return row

    return parallel_map(work, points, threads)
