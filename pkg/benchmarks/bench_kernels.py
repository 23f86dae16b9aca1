#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Covers the three hot loops: sparse series multiplication (cusp-form
generation), truncated dense multiplication (basis expansion), and
table counting with per-value tallies.

    python benchmarks/bench_kernels.py [--prec 1000000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from modpforms import kernels
from modpforms.series import delta_power, eta_cubed


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(prec, repeat):
    backends = kernels.backends()
    eta = eta_cubed(3, prec)
    dense = eta.dense().coeffs
    dense_small_a = np.random.default_rng(0).integers(0, 7, size=20000, dtype=np.uint8)
    dense_small_b = np.random.default_rng(1).integers(0, 7, size=20000, dtype=np.uint8)
    table = delta_power(3, 1, prec).coeffs
    bounds = np.array([prec // 100, prec // 10, prec], dtype=np.int64)

    rows = []
    for name, impl in backends.items():
        t_sparse = _time(
            lambda: impl.mul_sparse(dense, eta.exponents, eta.coefficients, 3, prec),
            repeat,
        )
        t_dense = _time(
            lambda: impl.mul_dense(dense_small_a, dense_small_b, 7, 20000), repeat
        )
        t_count = _time(lambda: impl.count_segments(table, bounds, 3), repeat)
        t_sigma = _time(lambda: impl.sigma_sieve(prec // 10, 3, 7), repeat)
        rows.append((name, t_sparse, t_dense, t_count, t_sigma))

    print(f"{'backend':<8} {'mul_sparse':>12} {'mul_dense':>12} {'count':>12} {'sigma':>12}")
    print(f"{'':8} {f'({prec} coeffs)':>12} {'(20k x 20k)':>12} {f'({prec})':>12} {f'({prec // 10})':>12}")
    for name, *times in rows:
        print(f"{name:<8}" + "".join(f" {t * 1000:>10.1f}ms" for t in times))
    if len(rows) == 2:
        speedups = [rows[0][i] / rows[1][i] if rows[1][i] else 0 for i in range(1, 5)]
        print(
            f"{'speedup':<8}"
            + "".join(f" {s:>11.2f}x" for s in speedups)
            + "   (numpy time / cython time)"
        )

    # scan throughput, the counting engineering target
    for name, impl in backends.items():
        t = _time(lambda: impl.count_segments(table, bounds[-1:], 3), repeat)
        print(f"scan throughput [{name}]: {prec / t / 1e6:.0f}M coefficients/s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--prec", type=int, default=10**6)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    bench(args.prec, args.repeat)
