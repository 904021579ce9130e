"""Compiled vs numpy kernel for the per-drop received-power sum.

    python3 benchmarks/bench_kernels.py [--points N] [--repeat K]
"""
import argparse
import timeit

import numpy as np

from aerolay import _kernels_py, kernels
from aerolay.config import AntennaConfig


def workload(n, n_drops, seed=0):
    rng = np.random.default_rng(seed)
    owner = np.sort(rng.integers(0, n_drops, n))
    r = 5000.0 * np.sqrt(rng.random(n))
    states = (rng.random(n) < 0.3).astype(np.int8)
    amp = rng.gamma(3.0, 1.0 / 3.0, n) * 1e-3
    return owner, r, 75.0, states, amp, (2520.0, 124.7), (2.2, 3.2), AntennaConfig(), 25.0, 100.0, n_drops


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=2_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    args_ = workload(args.points, 10_000)
    impls = [("numpy", _kernels_py)]
    if kernels.BACKEND == "cython":
        impls.append(("cython", kernels._impl))
    ref = kernels.received_power_sum(*args_, impl=_kernels_py)
    for name, mod in impls:
        out = kernels.received_power_sum(*args_, impl=mod)
        err = np.max(np.abs(out - ref) / np.maximum(np.abs(ref), 1e-300))
        t = min(timeit.repeat(lambda: kernels.received_power_sum(*args_, impl=mod), number=1, repeat=args.repeat))
        print(f"{name:7s} {t * 1e3:8.1f} ms  ({args.points / t / 1e6:6.1f} M interferers/s)  max rel diff {err:.1e}")


if __name__ == "__main__":
    main()
