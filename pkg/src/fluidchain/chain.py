"""Symmetric random-walk Metropolis simulation with reproducible seeding.

The accept test is done in log space: a proposal x+y is accepted iff
log u < log pi(x+y) - log pi(x), so moves that do not decrease the density
are accepted with probability one and superexponential tails cannot
overflow the ratio.  All randomness is pre-drawn from a PCG64 stream
derived from the config seed, which makes runs bit-reproducible and lets
the compiled and plain-Python chain kernels share identical draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .densities import TargetDensity
from .errors import BudgetError, InvalidArgumentError
from .proposals import Proposal
from .seeding import make_rng

# Hard cap on pre-drawn chain steps (memory: 24 bytes per step).
DEFAULT_STEP_CAP = 5_000_000


@dataclass(frozen=True)
class ChainConfig:
    density: TargetDensity
    proposal: Proposal
    x0: tuple
    seed: int
    n_steps: int
    step_cap: int = DEFAULT_STEP_CAP


@dataclass
class Trajectory:
    """States Phi_0..Phi_n plus the acceptance flag of each transition."""

    states: np.ndarray          # (n+1, 2)
    accepted: np.ndarray        # (n,) bool
    seed: int
    numeric_warnings: int = 0

    @property
    def n_steps(self) -> int:
        return self.accepted.shape[0]


def _draw_chain_randomness(proposal: Proposal, rng: np.random.Generator, n: int):
    """Increments and log-uniforms for n steps, in a fixed draw order."""
    incs = proposal.sample_increments(rng, n)
    log_us = np.log(rng.random(n))
    return incs, log_us


def _validated_start(density: TargetDensity, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (2,) or not np.all(np.isfinite(x0)):
        raise InvalidArgumentError("x0 must be a finite 2-d point")
    density.log_density(x0)  # raises on a singularity
    return x0


def simulate(cfg: ChainConfig) -> Trajectory:
    """Run cfg.n_steps Metropolis steps from cfg.x0.

    Identical configs produce identical trajectories.  If n_steps exceeds
    the step cap, the capped prefix is simulated and attached to the
    raised BudgetError as ``partial``.
    """
    if cfg.n_steps < 0:
        raise InvalidArgumentError("n_steps must be nonnegative")
    x0 = _validated_start(cfg.density, cfg.x0)
    n = min(cfg.n_steps, cfg.step_cap)
    rng = make_rng(cfg.seed)
    incs, log_us = _draw_chain_randomness(cfg.proposal, rng, n)
    states = np.empty((n + 1, 2))
    accepted = np.zeros(n, dtype=np.uint8)
    d = cfg.density
    warn = kernels.chain_run(d.code, d.kparams, x0[0], x0[1],
                             incs, log_us, states, accepted)
    traj = Trajectory(states=states, accepted=accepted.astype(bool),
                      seed=cfg.seed, numeric_warnings=int(warn))
    if n < cfg.n_steps:
        raise BudgetError(
            f"step budget exceeded: requested {cfg.n_steps}, cap {cfg.step_cap}",
            partial=traj,
        )
    return traj


def srwm_step(density: TargetDensity, proposal: Proposal, x,
              rng: np.random.Generator):
    """One Metropolis transition from x; returns (new point, accepted)."""
    x = _validated_start(density, x)
    incs, log_us = _draw_chain_randomness(proposal, rng, 1)
    states = np.empty((2, 2))
    accepted = np.zeros(1, dtype=np.uint8)
    kernels.chain_run(density.code, density.kparams, x[0], x[1],
                      incs, log_us, states, accepted)
    return states[1], bool(accepted[0])


def acceptance_rate_from(density: TargetDensity, proposal: Proposal, x,
                         n: int, seed: int) -> float:
    """Empirical acceptance frequency of n independent one-step proposals
    from the fixed state x (not a chain)."""
    x = _validated_start(density, x)
    rng = make_rng(seed)
    incs, log_us = _draw_chain_randomness(proposal, rng, n)
    lp_x = density.log_density(x)
    lp_prop = density.log_density_batch(x[None, :] + incs)
    with np.errstate(invalid="ignore"):
        ok = np.isfinite(lp_prop) & (log_us < lp_prop - lp_x)
    return float(np.mean(ok))


def max_partial_sum_stat(traj: Trajectory, drift) -> np.ndarray:
    """Running maximum of |sum of estimated martingale increments|.

    The increment at step k is eps_k = Phi_k - Phi_{k-1} - D(Phi_{k-1})
    where D is the supplied drift evaluator (a callable on points, or an
    object with eval_batch over an (n, 2) array).  Returns the series
    M(n) = max_{1 <= l <= n} |sum_{k <= l} eps_k| for n = 1..len.
    """
    states = traj.states
    if states.shape[0] < 2:
        raise InvalidArgumentError("trajectory has no increments")
    prev = states[:-1]
    if hasattr(drift, "eval_batch"):
        d = drift.eval_batch(prev)
    else:
        d = np.empty_like(prev)
        for i in range(prev.shape[0]):
            try:
                d[i] = drift(prev[i])
            except Exception as exc:
                raise InvalidArgumentError(
                    f"drift evaluation failed at state index {i}: {exc}"
                ) from exc
    if not np.all(np.isfinite(d)):
        idx = int(np.argwhere(~np.isfinite(d).all(axis=1))[0][0])
        raise InvalidArgumentError(f"drift evaluation non-finite at state index {idx}")
    eps = states[1:] - prev - d
    partial = np.cumsum(eps, axis=0)
    norms = np.hypot(partial[:, 0], partial[:, 1])
    return np.maximum.accumulate(norms)


def martingale_noise_quantile(traj: Trajectory, drift, q: float = 0.999) -> float:
    """q-quantile of |eps_k| over the trajectory (moment-tightness probe)."""
    states = traj.states
    prev = states[:-1]
    if hasattr(drift, "eval_batch"):
        d = drift.eval_batch(prev)
    else:
        d = np.array([drift(p) for p in prev])
    eps = states[1:] - prev - d
    return float(np.quantile(np.hypot(eps[:, 0], eps[:, 1]), q))
