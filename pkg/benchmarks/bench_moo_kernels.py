"""Benchmark the numba-compiled Pareto kernels against the pure-numpy fallback.

The same kernels back non-dominated sorting, crowding distance, and 2-D
hypervolume throughout the optimizer loop and the metric sweeps. Run:

    python benchmarks/bench_moo_kernels.py
    MOCAPO_DISABLE_NUMBA=1 mocapo run ...   # forces the numpy path in the CLI

Agreement between the two paths is asserted on every benchmarked input.
"""

import argparse
import time

import numpy as np

from mocapo.moo import _numba_kernels, _numpy_kernels

KERNELS = {
    "nds_ranks": lambda impl, pts: impl.nds_ranks(pts),
    "crowding": lambda impl, pts: impl.crowding_distances(pts),
    "hypervolume_2d": lambda impl, pts: impl.hypervolume_2d(pts, 1.1, 1.1),
}


def time_call(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def check_agreement(name: str, pts: np.ndarray) -> None:
    a = KERNELS[name](_numba_kernels, pts)
    b = KERNELS[name](_numpy_kernels, pts)
    if name == "nds_ranks":
        assert np.array_equal(a, b), f"{name}: rank mismatch"
    elif name == "crowding":
        assert np.allclose(a, b, rtol=0, atol=1e-12), f"{name}: distance mismatch"
    else:
        assert abs(a - b) <= 1e-12, f"{name}: hypervolume mismatch"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[16, 64, 256, 1024])
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    # Warm up JIT compilation outside the timed region.
    warm = rng.random((8, 2))
    for name in KERNELS:
        KERNELS[name](_numba_kernels, warm)

    header = f"{'kernel':<16} {'n':>6} {'numba':>12} {'numpy':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n in args.sizes:
        pts = rng.random((n, 2))
        for name in KERNELS:
            check_agreement(name, pts)
            t_numba = time_call(lambda: KERNELS[name](_numba_kernels, pts), args.repeats)
            t_numpy = time_call(lambda: KERNELS[name](_numpy_kernels, pts), args.repeats)
            print(
                f"{name:<16} {n:>6} {t_numba * 1e6:>10.1f}us {t_numpy * 1e6:>10.1f}us "
                f"{t_numpy / t_numba:>8.2f}x"
            )


if __name__ == "__main__":
    main()
