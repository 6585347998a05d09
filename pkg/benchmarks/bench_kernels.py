"""Compare the compiled and pure-Python kernels on the hot paths.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends produce bit-identical results for the stochastic kernels, so
only wall time is reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from epistoch import _pykernels

try:
    from epistoch import _ckernels
except ImportError:
    _ckernels = None

SEIR = (2000, 1, 2.0 / 7.0, 7.0, 3 / 7, 7.0, 3 / 7)

CASES = {
    "gamma_draws (1e5, cv=0.43)": lambda k: k.gamma_draws(7.0, 3 / 7, 1, 100_000),
    "simulate (n=2000, r0=2)": lambda k: k.simulate(*SEIR, 3),
    "final_sizes (50 x n=2000)": lambda k: k.final_sizes(*SEIR, np.arange(50, dtype=np.uint64)),
    "branching_batch (2000 runs)": lambda k: k.branching_batch(
        1, 2.0 / 7.0, 7.0, 1.0, 10_000, np.arange(2000, dtype=np.uint64)),
    "euler_lotka_integral": lambda k: k.euler_lotka_integral(0.0655, 2.0 / 7.0, 7.0, 3 / 7,
                                                             7.0, 3 / 7),
}


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the Python backend is timed")
    print(f"{'kernel':32} {'python (s)':>12} {'compiled (s)':>13} {'speedup':>9}")
    for name, case in CASES.items():
        py = best_time(lambda: case(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:32} {py:12.4f}")
            continue
        cy = best_time(lambda: case(_ckernels), args.repeat)
        print(f"{name:32} {py:12.4f} {cy:13.5f} {py / cy:8.0f}x")


if __name__ == "__main__":
    main()
