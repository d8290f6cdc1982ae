"""Compiled kernels vs the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--rows 31655]

The logistic-regression case mirrors one Adult training split (70% of
45,222 rows, one-hot encoded); the other two mirror the metric and
statistics workloads.
"""
import argparse
import time

import numpy as np

from fairaudit import _kernels_py

try:
    from fairaudit import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def adult_like(rows, rng):
    """Six standardized numerics plus ~100 one-hot columns, six blocks."""
    blocks = [9, 16, 7, 15, 6, 2, 2, 41]
    X = [rng.normal(size=(rows, 4))]
    for width in blocks:
        codes = rng.integers(0, width, rows)
        X.append(np.eye(width)[codes])
    X = np.ascontiguousarray(np.hstack(X))
    y = (rng.random(rows) < 0.25).astype(np.float64)
    return X, y, np.ones(rows)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--rows", type=int, default=31655)
    ap.add_argument("--epochs", type=int, default=500)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    X, y, w = adult_like(args.rows, rng)
    a, b = rng.normal(size=2000), rng.normal(size=2000)
    codes = rng.integers(0, 4, 200_000).astype(np.int_)
    yt = rng.integers(0, 2, 200_000).astype(np.int8)
    yp = rng.integers(0, 2, 200_000).astype(np.int8)

    cases = [
        (f"logistic_gd {X.shape[0]}x{X.shape[1]}, {args.epochs} epochs",
         lambda k: k.logistic_gd(X, y, w, 0.1, args.epochs, 1e-4)),
        ("dominance_counts 2000 x 2000", lambda k: k.dominance_counts(a, b)),
        ("confusion_by_group 200k rows, 4 groups", lambda k: k.confusion_by_group(codes, yt, yp, 4)),
    ]
    print(f"{'kernel':46s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, call in cases:
        t_py = best_of(lambda: call(_kernels_py), args.repeat)
        if _compiled is None:
            print(f"{name:46s} {t_py:9.4f}s {'n/a':>10s} {'':>8s}")
            continue
        t_cy = best_of(lambda: call(_compiled), args.repeat)
        print(f"{name:46s} {t_py:9.4f}s {t_cy:9.4f}s {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
