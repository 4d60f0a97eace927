"""Subgeometric rate sequences, ergodicity-exponent arithmetic, and the
empirical state-dependent drift checks.

Rate sequences come from a concave rate profile phi with inf phi > 0:
with H(v) = integral_1^v dx/phi(x), the sequence is r(k) = phi(H^{-1}(k)),
normalized so r(0) = 1.  The polynomial family phi(v) = v^a has the
closed form r(k) = (1 + (1-a) k)^(a/(1-a)); the numeric path reproduces
it through quadrature plus monotone inversion and is used to validate
tabulated profiles.  The numeric path runs in mpmath extended precision:
at a = 0.75 and k = 1000 the sequence exceeds 1e7, so matching the
closed form to 1e-9 absolute requires ~1e-17 relative accuracy, past
float64 resolution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import mpmath as mp
import numpy as np
from scipy.optimize import bisect

from .chain import DEFAULT_STEP_CAP, _draw_chain_randomness
from .densities import TargetDensity
from .errors import InvalidArgumentError
from .kernels import chain_exit_times, chain_until_level
from .proposals import Proposal
from .seeding import make_rng, mix64
from ._parallel import parallel_map

DRIFT_ROW_COLUMNS = ("x_norm", "ratio_p", "stderr", "p_sigma_gt",
                     "mean_path_moment", "censored_count", "direction")
KAPPA_ROW_COLUMNS = ("x_norm", "kappa1_mean", "kappa2_mean", "kappa3_mean",
                     "kappa_mean", "censored_count")


@dataclass(frozen=True)
class Polynomial:
    """Rate profile phi(v) = v^alpha_exp with alpha_exp in (0, 1)."""

    alpha_exp: float

    def __post_init__(self):
        if not (0.0 < self.alpha_exp < 1.0):
            raise InvalidArgumentError("alpha_exp must be in (0, 1)")

    def closed_rate(self, k: float) -> float:
        a = self.alpha_exp
        return (1.0 + (1.0 - a) * k) ** (a / (1.0 - a))

    def phi_mp(self, v):
        return v ** mp.mpf(self.alpha_exp)


@dataclass(frozen=True)
class Custom:
    """Tabulated concave nondecreasing rate profile on a grid starting at 1.

    Piecewise linear between nodes, extended past the last node with the
    final slope.  Concavity and monotonicity of the table are enforced.
    """

    vs: tuple
    phis: tuple

    def __post_init__(self):
        vs = tuple(float(v) for v in self.vs)
        phis = tuple(float(p) for p in self.phis)
        object.__setattr__(self, "vs", vs)
        object.__setattr__(self, "phis", phis)
        if len(vs) != len(phis) or len(vs) < 2:
            raise InvalidArgumentError("need matching grids with >= 2 nodes")
        if vs[0] != 1.0:
            raise InvalidArgumentError("profile grid must start at v = 1")
        dv = np.diff(vs)
        if (dv <= 0).any():
            raise InvalidArgumentError("profile grid must be increasing")
        if min(phis) <= 0:
            raise InvalidArgumentError("phi must be positive")
        slopes = np.diff(phis) / dv
        if (slopes < -1e-15).any():
            raise InvalidArgumentError("phi must be nondecreasing")
        if (np.diff(slopes) > 1e-12 * max(abs(s) for s in slopes.tolist() + [1.0])).any():
            raise InvalidArgumentError("tabulated phi is not concave")

    def phi(self, v: float) -> float:
        vs, phis = self.vs, self.phis
        if v <= vs[0]:
            return phis[0]
        i = int(np.searchsorted(vs, v, side="right")) - 1
        i = min(i, len(vs) - 2)
        slope = (phis[i + 1] - phis[i]) / (vs[i + 1] - vs[i])
        return phis[i] + slope * (v - vs[i])


def _node_H(profile: Custom) -> np.ndarray:
    """Cumulative H at the table nodes, by exact per-segment integrals of
    the piecewise-linear phi."""
    vs, phis = profile.vs, profile.phis
    H = [0.0]
    for i in range(len(vs) - 1):
        a, b = vs[i], vs[i + 1]
        pa, pb = phis[i], phis[i + 1]
        slope = (pb - pa) / (b - a)
        if abs(slope) < 1e-300:
            seg = (b - a) / pa
        else:
            seg = math.log(pb / pa) / slope
        H.append(H[-1] + seg)
    return np.array(H)


def _custom_H(profile: Custom, nodes_H: np.ndarray, v: float) -> float:
    vs, phis = profile.vs, profile.phis
    if v <= vs[0]:
        return (v - vs[0]) / phis[0]
    i = int(np.searchsorted(vs, v, side="right")) - 1
    i = min(i, len(vs) - 2)
    a = vs[i]
    pa = phis[i]
    slope = (phis[i + 1] - phis[i]) / (vs[i + 1] - vs[i])
    if abs(slope) < 1e-300:
        seg = (v - a) / pa
    else:
        seg = math.log((pa + slope * (v - a)) / pa) / slope
    return float(nodes_H[i] + seg)


def _rate_sequence_custom(profile: Custom, n: int, tol: float = 1e-10):
    nodes_H = _node_H(profile)
    phi1 = profile.phi(1.0)
    out = [1.0]
    v_prev = 1.0
    for k in range(1, n):
        target = float(k)

        def g(v):
            return _custom_H(profile, nodes_H, v) - target

        lo = v_prev
        hi = max(2.0 * v_prev, v_prev + 1.0)
        while g(hi) < 0.0:
            lo, hi = hi, 2.0 * hi
        v = bisect(g, lo, hi, xtol=tol)
        out.append(profile.phi(v) / phi1)
        v_prev = v
    return out


def _rate_sequence_poly_numeric(rf: Polynomial, n: int, dps: int = 40):
    """Quadrature + bracketed root-finding in extended precision."""
    with mp.workdps(dps):
        one = mp.mpf(1)
        phi1 = rf.phi_mp(one)
        out = [1.0]
        v_prev = one
        H_prev = mp.mpf(0)
        for k in range(1, n):
            target = mp.mpf(k)

            def g(v):
                inc = mp.quad(lambda x: 1 / rf.phi_mp(x), [v_prev, v])
                return H_prev + inc - target

            lo = v_prev
            hi = 2 * v_prev + 1
            while g(hi) < 0:
                lo, hi = hi, 2 * hi
            v = mp.findroot(g, (lo, hi), solver="anderson", tol=mp.mpf("1e-30"))
            out.append(float(rf.phi_mp(v) / phi1))
            H_prev = target
            v_prev = v
    return out


def rate_sequence(rf, n: int, method: str = "auto"):
    """r(0..n-1) for a Polynomial or Custom rate profile.

    method: "closed" (Polynomial only), "numeric" (quadrature+inversion),
    or "auto" (closed form when available).
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if isinstance(rf, Polynomial):
        if method == "numeric":
            return _rate_sequence_poly_numeric(rf, n)
        if method in ("auto", "closed"):
            return [rf.closed_rate(k) for k in range(n)]
        raise InvalidArgumentError(f"unknown method {method!r}")
    if isinstance(rf, Custom):
        if method == "closed":
            raise InvalidArgumentError("tabulated profiles have no closed form")
        if method in ("auto", "numeric"):
            return _rate_sequence_custom(rf, n)
        raise InvalidArgumentError(f"unknown method {method!r}")
    raise InvalidArgumentError(f"unsupported rate profile {type(rf).__name__}")


def parse_rate_profile(text: str):
    """CLI helper: "poly:0.5" or "table:v1:p1,v2:p2,..."."""
    if text.startswith("poly:"):
        return Polynomial(alpha_exp=float(text[5:]))
    if text.startswith("table:"):
        pairs = [tuple(float(t) for t in chunk.split(":"))
                 for chunk in text[6:].split(",") if chunk]
        if any(len(p) != 2 for p in pairs):
            raise InvalidArgumentError("table entries must be v:phi pairs")
        return Custom(vs=tuple(p[0] for p in pairs),
                      phis=tuple(p[1] for p in pairs))
    raise InvalidArgumentError(f"unparseable rate profile {text!r}")


def ergodic_exponents(p: float, beta: float, q_or_u: float, regime: str,
                      m: Optional[float] = None,
                      delta: Optional[float] = None) -> dict:
    """Polynomial exponents of the norm-like function and of the rate in
    the three ergodicity regimes.

    general: f ~ |x|^(p - q(1+beta)), rate ~ n^(q-1), for 1 <= q <= p/(1+beta).
    superexp: f ~ |x|^(p - u), rate ~ n^(u-1), for 1 <= u <= p.
    subexp:   f ~ |x|^(p - u(2 - m*delta)), rate ~ n^(u-1),
              for 1 <= u <= p/(2 - m*delta).
    """
    v = q_or_u
    if regime == "general":
        hi = p / (1.0 + beta)
        if not (1.0 <= v <= hi + 1e-12):
            raise InvalidArgumentError(
                f"q={v} violates 1 <= q <= p/(1+beta) = {hi}")
        return {"f_exponent": p - v * (1.0 + beta), "rate_exponent": v - 1.0}
    if regime == "superexp":
        if not (1.0 <= v <= p + 1e-12):
            raise InvalidArgumentError(f"u={v} violates 1 <= u <= p = {p}")
        return {"f_exponent": p - v, "rate_exponent": v - 1.0}
    if regime == "subexp":
        if m is None or delta is None:
            raise InvalidArgumentError("subexp regime needs m and delta")
        shrink = 2.0 - m * delta
        if shrink <= 0:
            raise InvalidArgumentError("need m * delta < 2")
        hi = p / shrink
        if not (1.0 <= v <= hi + 1e-12):
            raise InvalidArgumentError(
                f"u={v} violates 1 <= u <= p/(2 - m*delta) = {hi}")
        return {"f_exponent": p - v * shrink, "rate_exponent": v - 1.0}
    raise InvalidArgumentError(f"unknown regime {regime!r}")


@dataclass
class DriftReport:
    rows: list
    config: dict
    base_seed: int

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "base_seed": self.base_seed,
                           "rows": self.rows}, sort_keys=True, indent=2)

    def row_records(self):
        for row in self.rows:
            yield {k: row[k] for k in DRIFT_ROW_COLUMNS}


def drift_check(density: TargetDensity, p: float, proposal: Proposal,
                rho: float, T: float, x_norms, replicas: int,
                base_seed: int, p_moment: Optional[float] = None,
                step_cap: int = DEFAULT_STEP_CAP,
                threads: Optional[int] = None) -> DriftReport:
    """Empirical state-dependent drift condition at increasing radii.

    Each replica runs from |x| * direction until the norm first drops
    below rho*|x| (sigma) or the step budget ceil(T*|x|^(1+beta)) ends.
    ratio_p averages |Phi_tau|^p / |x|^p over uncensored replicas;
    p_sigma_gt is the censored fraction; mean_path_moment averages the
    path sum of |Phi_k|^p over all replicas, scaled by |x|^(p+1+beta).
    Mixture densities are probed both on the default direction and on
    the diagonal.  Levels whose budget exceeds the cap are reported
    incomplete rather than aborting.
    """
    if not (0.0 < rho < 1.0):
        raise InvalidArgumentError("rho must be in (0, 1)")
    if T <= 0 or replicas < 1:
        raise InvalidArgumentError("T must be positive and replicas >= 1")
    levels = [float(v) for v in x_norms]
    if sorted(levels) != levels or len(set(levels)) != len(levels):
        raise InvalidArgumentError("x_norms must be strictly increasing")
    if p_moment is None:
        p_moment = p
    beta = density.beta
    main_dir = np.array([math.cos(1.0), math.sin(1.0)])
    directions = [("main", main_dir)]
    if density.has_cone_exclusion:
        directions.append(("diag", np.array([1.0, 1.0]) / math.sqrt(2.0)))

    tasks = []
    for di, (tag, direction) in enumerate(directions):
        for li, level in enumerate(levels):
            budget = int(math.ceil(T * level ** (1.0 + beta)))
            tasks.append((di, tag, direction, li, level, budget))

    def run_task(task):
        di, tag, direction, li, level, budget = task
        if budget > step_cap:
            return {"x_norm": level, "direction": tag, "completed": False,
                    "budget": budget, "ratio_p": float("nan"),
                    "stderr": float("nan"), "p_sigma_gt": float("nan"),
                    "mean_path_moment": float("nan"), "censored_count": 0}
        x0 = level * direction
        inner = rho * level
        ratios = []
        moments = []
        censored = 0
        for j in range(replicas):
            seed = mix64(base_seed, (di * len(levels) + li) * replicas + j)
            rng = make_rng(seed)
            incs, log_us = _draw_chain_randomness(proposal, rng, budget)
            sigma, x1, x2, moment, _warn = chain_until_level(
                density.code, density.kparams, x0[0], x0[1],
                incs, log_us, inner, float(p_moment))
            if sigma < 0:
                censored += 1
            else:
                ratios.append(math.hypot(x1, x2) ** p / level ** p)
            moments.append(moment / level ** (p_moment + 1.0 + beta))
        n_unc = len(ratios)
        if n_unc:
            arr = np.array(ratios)
            mean = float(arr.mean())
            se = float(arr.std(ddof=1) / math.sqrt(n_unc)) if n_unc > 1 else float("nan")
        else:
            mean, se = float("nan"), float("nan")
        return {"x_norm": level, "direction": tag, "completed": True,
                "budget": budget, "ratio_p": mean, "stderr": se,
                "p_sigma_gt": censored / replicas,
                "mean_path_moment": float(np.mean(moments)),
                "censored_count": censored}

    rows = parallel_map(run_task, tasks, threads)
    config = {"density": density.key,
              "density_params": {k: v for k, v in sorted(density.params.items())},
              "proposal": proposal.base, "p": p, "p_moment": p_moment,
              "rho": rho, "T": T, "x_norms": levels, "replicas": replicas}
    return DriftReport(rows=list(rows), config=config, base_seed=base_seed)


@dataclass
class KappaReport:
    rows: list
    slope: float
    config: dict
    base_seed: int

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "base_seed": self.base_seed,
                           "slope": self.slope, "rows": self.rows},
                          sort_keys=True, indent=2)

    def row_records(self):
        for row in self.rows:
            yield {k: row[k] for k in KAPPA_ROW_COLUMNS}


def kappa_diagnostics(density: TargetDensity, proposal: Proposal,
                      delta: float, x_norms, replicas: int, base_seed: int,
                      R: Optional[float] = None,
                      budget_factor: float = 80.0,
                      step_cap: int = DEFAULT_STEP_CAP,
                      threads: Optional[int] = None) -> KappaReport:
    """Empirical means of the three diagonal-escape clocks from diagonal
    starts of a mixture, plus the linear growth of their minimum in |x|.

    Clock 1 fires when the separation coordinate |<v*, Phi_k>| reaches
    2*delta*|x|, clock 2 when the displacement reaches |x|/2, clock 3
    when the norm drops below R.  Requires a compactly supported
    proposal; the bound being probed is linear in delta*|x|.
    """
    if not density.has_cone_exclusion:
        raise InvalidArgumentError("kappa diagnostics need a mixture density")
    if not np.isfinite(proposal.support_radius):
        raise InvalidArgumentError("kappa diagnostics need compact support")
    if not (0.0 < delta < 0.5):
        raise InvalidArgumentError("delta must be in (0, 0.5)")
    levels = [float(v) for v in x_norms]
    if sorted(levels) != levels or len(set(levels)) != len(levels):
        raise InvalidArgumentError("x_norms must be strictly increasing")
    if R is None:
        R = 0.5 * levels[0]
    direction = np.array([1.0, 1.0]) / math.sqrt(2.0)
    v_star = np.array([-1.0, 1.0]) / math.sqrt(2.0)

    def run_level(item):
        li, level = item
        budget = min(int(math.ceil(budget_factor * delta * level + 2000)), step_cap)
        x0 = level * direction
        k1s, k2s, k3s, kmins = [], [], [], []
        censored = 0
        for j in range(replicas):
            seed = mix64(base_seed, li * replicas + j)
            rng = make_rng(seed)
            incs, log_us = _draw_chain_randomness(proposal, rng, budget)
            k1, k2, k3, _warn = chain_exit_times(
                density.code, density.kparams, x0[0], x0[1], incs, log_us,
                v_star[0], v_star[1], 2.0 * delta * level, 0.5 * level, R)
            fired = [k for k in (k1, k2, k3) if k >= 0]
            if len(fired) < 3:
                censored += 1
            if k1 >= 0:
                k1s.append(k1)
            if k2 >= 0:
                k2s.append(k2)
            if k3 >= 0:
                k3s.append(k3)
            if fired:
                kmins.append(min(fired))

        def mean_or_nan(vals):
            return float(np.mean(vals)) if vals else float("nan")

        return {"x_norm": level, "kappa1_mean": mean_or_nan(k1s),
                "kappa2_mean": mean_or_nan(k2s),
                "kappa3_mean": mean_or_nan(k3s),
                "kappa_mean": mean_or_nan(kmins),
                "censored_count": censored, "budget": budget}

    rows = list(parallel_map(run_level, list(enumerate(levels)), threads))
    xs = np.array([row["x_norm"] for row in rows])
    ys = np.array([row["kappa_mean"] for row in rows])
    ok = np.isfinite(ys)
    if ok.sum() >= 2:
        slope = float(np.polyfit(xs[ok], ys[ok], 1)[0])
    else:
        slope = float("nan")
    config = {"density": density.key,
              "density_params": {k: v for k, v in sorted(density.params.items())},
              "proposal": proposal.base, "delta": delta, "R": R,
              "x_norms": levels, "replicas": replicas}
    return KappaReport(rows=rows, slope=slope, config=config,
                       base_seed=base_seed)
