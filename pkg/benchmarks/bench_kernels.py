#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

The two hot kernels are the single-mode joint table (a truncated series per
cell) and the bucket-axis convolution (a triangular Toeplitz apply).  Run:

    python benchmarks/bench_kernels.py [--repeats 5]

Whichever backend the package selected at import (see GHOSTSPEC_NO_NUMBA)
is also reported, so timings can be related to the deployed configuration.
"""

import argparse
import time

import numpy as np

from ghostspec import _kernels
from ghostspec.photon_stats import thermal_pmf_vector

TABLE_CASES = [  # (t, n_th, n1_max, n2_max)
    (0.5, 2.0, 60, 45),
    (0.8, 2.0, 150, 60),
    (0.9, 4.0, 300, 90),
]

BUCKET_CASES = [  # (n1_max, n2_max)
    (60, 45),
    (150, 60),
    (300, 90),
]


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_tables(repeats):
    print(f"{'single_mode_table':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for t, n_th, n1, n2 in TABLE_CASES:
        t_np, ref = _time(lambda: _kernels._table_numpy(t, n_th, n1, n2), repeats)
        if _kernels.HAVE_NUMBA:
            t_nb, out = _time(lambda: _kernels._table_numba(t, n_th, n1, n2), repeats)
            err = np.max(np.abs(out - ref))
            assert err < 1e-13, f"backends disagree by {err}"
            print(f"  t={t} n_th={n_th} {n1}x{n2:<6}{t_np * 1e3:>10.2f}ms"
                  f"{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")
        else:
            print(f"  t={t} n_th={n_th} {n1}x{n2:<6}{t_np * 1e3:>10.2f}ms"
                  f"{'n/a':>12}{'':>10}")


def bench_bucket(repeats):
    print(f"{'bucket_convolve':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    rng = np.random.default_rng(0)
    for n1, n2 in BUCKET_CASES:
        w = thermal_pmf_vector(1.5, n1)
        table = rng.random((n1 + 1, n2 + 1))
        table /= table.sum()
        t_np, ref = _time(lambda: _kernels._bucket_numpy(w, table), repeats)
        if _kernels.HAVE_NUMBA:
            t_nb, out = _time(lambda: _kernels._bucket_numba(w, table), repeats)
            err = np.max(np.abs(out - ref))
            assert err < 1e-13, f"backends disagree by {err}"
            print(f"  {n1}x{n2:<22}{t_np * 1e3:>10.2f}ms"
                  f"{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")
        else:
            print(f"  {n1}x{n2:<22}{t_np * 1e3:>10.2f}ms{'n/a':>12}{'':>10}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {_kernels.backend_name()}")
    if _kernels.HAVE_NUMBA:
        # trigger compilation outside the timed region
        _kernels._table_numba(0.5, 1.0, 8, 8)
        _kernels._bucket_numba(np.array([1.0, 0.0]), np.eye(2))
    bench_tables(args.repeats)
    bench_bucket(args.repeats)


if __name__ == "__main__":
    main()
