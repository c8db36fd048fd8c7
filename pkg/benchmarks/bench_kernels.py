"""Timing comparison of the numba and pure-numpy kernel paths.

Checks bit-for-bit agreement on every kernel first, then reports best-of-N
wall times. Run:

    python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from rappor_agg import kernels


def best_of(fn, args, repeat: int) -> float:
    fn(*args)  # warm-up; first numba call includes compilation
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000, help="reports per kernel call")
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions")
    args = parser.parse_args()

    numba_kernels = kernels.numba_kernels_or_none()
    if numba_kernels is None:
        print("numba is not importable; nothing to compare")
        return 1

    rng = np.random.default_rng(2024)
    n = args.n
    seeds = rng.integers(0, 2**64, size=n, dtype=np.uint64)
    base = rng.integers(0, 2**32, size=n, dtype=np.uint64)
    weights = np.zeros(33, dtype=np.float64)
    weights[1:] = np.log10(32.0 / np.arange(1, 33))
    prr_counts = rng.integers(0, 33, size=n).astype(np.int64)
    irr_counts = rng.integers(0, 33, size=n).astype(np.int64)
    cohorts = rng.integers(0, 64, size=n).astype(np.int64)

    cases = [
        ("stream_uniforms", (np.uint64(7), n)),
        ("stream_seeds", (np.uint64(7), n)),
        ("prr_bits", (seeds, base, 32, 0.5)),
        ("irr_bits", (seeds, base, 32, 0.5, 0.75)),
        ("popcounts", (base,)),
        ("weighted_sums", (prr_counts, irr_counts, cohorts, weights)),
    ]

    print(f"n = {n}, best of {args.repeat}")
    print(f"{'kernel':<16} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, call_args in cases:
        np_fn = kernels.NUMPY_KERNELS[name]
        nb_fn = numba_kernels[name]
        if not np.array_equal(np_fn(*call_args), nb_fn(*call_args)):
            raise AssertionError(f"{name}: paths disagree")
        t_np = best_of(np_fn, call_args, args.repeat)
        t_nb = best_of(nb_fn, call_args, args.repeat)
        print(f"{name:<16} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x")
    print("all kernels bit-identical across paths")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
