#!/usr/bin/env python3
"""Compare the compiled and pure-numpy solver backends on the same matrices.

Runs the decomposition at several sizes with both TRENDNETS_BACKEND values,
reporting wall time per solve and the largest elementwise disagreement.

Usage: python benchmarks/bench_backends.py [--rows 200000] [--periods 8]
"""

import argparse
import os
import time

import numpy as np


def make_series(n_rows, T, seed=0):
    rng = np.random.default_rng(seed)
    rates = rng.lognormal(mean=np.log(2.0), sigma=1.0, size=n_rows)
    counts = rng.poisson(rates[:, None], size=(n_rows, T)).astype(np.float64)
    spikes = rng.random(n_rows) < 0.05
    counts[spikes, rng.integers(0, T, size=int(spikes.sum()))] += 6.0 * np.sqrt(rates[spikes])
    return counts / 50.0


def solve(W, lam, backend):
    os.environ["TRENDNETS_BACKEND"] = backend
    from trendnets.decomp import SolverConfig, decompose

    t0 = time.perf_counter()
    result = decompose(W, SolverConfig(lam=lam))
    return time.perf_counter() - t0, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=200_000)
    parser.add_argument("--periods", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    sizes = [1_000, 20_000, args.rows]
    print(f"{'rows':>10} {'numba (s)':>12} {'numpy (s)':>12} {'speedup':>9} {'max |diff|':>12}")
    for n in sizes:
        W = make_series(n, args.periods)
        lam = 0.05
        # warm up compilation outside the timed region
        solve(W[:100], lam, "numba")
        times = {}
        results = {}
        for backend in ("numba", "numpy"):
            best = float("inf")
            for _ in range(args.repeats):
                dt, result = solve(W, lam, backend)
                best = min(best, dt)
            times[backend] = best
            results[backend] = result
        diff = float(np.abs(results["numba"].S - results["numpy"].S).max())
        print(
            f"{n:>10} {times['numba']:>12.3f} {times['numpy']:>12.3f} "
            f"{times['numpy'] / times['numba']:>8.1f}x {diff:>12.2e}"
        )


if __name__ == "__main__":
    main()
