"""Timing comparison of the compiled kernels against the pure-Python and
vectorized-numpy fallbacks.

Run as: python3 benchmarks/bench_kernels.py [--steps N] [--points M]

The chain kernel is compared between the jit dispatcher and its
uncompiled twin; the batch log-density is compared between the jit loop
and the numpy vectorized implementation that serves as the fallback
backend.  Set FLUIDCHAIN_NUMBA=0 to see the fallback wiring itself.
"""

import argparse
import time

import numpy as np

from fluidchain import make_density, make_proposal, make_rng
from fluidchain.chain import _draw_chain_randomness
from fluidchain import _impl, _vec
from fluidchain.kernels import backend


def _time(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--python-steps", type=int, default=20_000,
                    help="budget for the uncompiled chain twin")
    args = ap.parse_args()

    density = make_density("gauss-mixture")
    proposal = make_proposal("gauss")
    rng = make_rng(42)
    incs, log_us = _draw_chain_randomness(proposal, rng, args.steps)
    states = np.empty((args.steps + 1, 2))
    accepted = np.empty(args.steps, dtype=np.uint8)

    print(f"active backend: {backend()}")
    rows = []

    if _impl.USE_NUMBA:
        _impl.chain_run(density.code, density.kparams, 100.0, 50.0,
                        incs[:10], log_us[:10], states[:11], accepted[:10])
        t = _time(_impl.chain_run, density.code, density.kparams, 100.0, 50.0,
                  incs, log_us, states, accepted)
        rows.append(("chain_run jit", args.steps, t))
        py_chain = _impl.chain_run.py_func
    else:
        py_chain = _impl.chain_run
    n_py = min(args.python_steps, args.steps)
    t = _time(py_chain, density.code, density.kparams, 100.0, 50.0,
              incs[:n_py], log_us[:n_py], states[:n_py + 1], accepted[:n_py],
              repeat=1)
    rows.append(("chain_run python", n_py, t))

    pts = rng.standard_normal((args.points, 2)) * 5.0
    out = np.empty(args.points)
    if _impl.USE_NUMBA:
        _impl.logpi_batch(density.code, density.kparams, pts[:10], out[:10])
        t = _time(_impl.logpi_batch, density.code, density.kparams, pts, out)
        rows.append(("logpi_batch jit", args.points, t))
    t = _time(_vec.logpi_batch, density.code, density.kparams, pts, out)
    rows.append(("logpi_batch numpy", args.points, t))

    print(f"{'kernel':<22}{'n':>10}{'seconds':>12}{'n/sec':>14}")
    for name, n, t in rows:
        rate = n / t if t > 0 else float("inf")
        print(f"{name:<22}{n:>10}{t:>12.4f}{rate:>14.3e}")


if __name__ == "__main__":
    main()
