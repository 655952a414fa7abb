#!/usr/bin/env python3
"""Benchmark the min-norm QP kernels: compiled extension vs pure numpy.

The solve runs once per server round, so its latency bounds how fast a
simulation can spin.  Both backends execute the identical projected-
gradient iteration; only the per-iteration overhead differs.

Usage: python benchmarks/bench_qp.py [--repeats N] [--seed N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fedsim import _qp_py
from fedsim.qp import box_bounds, uniform_weights

try:
    from fedsim import _qp_cy
except ImportError:
    _qp_cy = None


def make_instance(m: int, d: int, rng: np.random.Generator):
    g = rng.standard_normal((m, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    lam0 = uniform_weights(m)
    lo, hi = box_bounds(lam0, 1.0)
    G = np.ascontiguousarray(g @ g.T)
    return G, lam0, lo, hi


def time_backend(kernel, instances, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for G, lam0, lo, hi in instances:
            m = lam0.shape[0]
            kernel.min_norm_kernel(G, lam0, lo, hi, 1e-10, 10 * m * m + 1000)
        best = min(best, (time.perf_counter() - t0) / len(instances))
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--instances", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'m':>5} {'d':>5} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for m in (2, 5, 10, 20, 50, 100):
        d = 4 * m  # update dimension exceeds participant count
        instances = [make_instance(m, d, rng) for _ in range(args.instances)]
        t_py = time_backend(_qp_py, instances, args.repeats)
        if _qp_cy is None:
            print(f"{m:>5} {d:>5} {t_py * 1e6:>10.1f}us {'n/a':>12} {'n/a':>9}")
            continue
        t_cy = time_backend(_qp_cy, instances, args.repeats)
        print(f"{m:>5} {d:>5} {t_py * 1e6:>10.1f}us {t_cy * 1e6:>10.1f}us "
              f"{t_py / t_cy:>8.1f}x")
    if _qp_cy is None:
        print("\ncompiled backend not built; install with a C compiler to compare")


if __name__ == "__main__":
    main()
