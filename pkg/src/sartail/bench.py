"""Benchmark the compiled kernel lane against the pure numpy fallback.

Run as ``python -m sartail.bench``. Covers the two hot kernels: exact KNN
queries (kd-tree vs vectorized brute force) and Lee-filter window
statistics (Cython loop vs sliding-window numpy).
"""

import argparse
import time

import numpy as np

from . import _purekernels, kernels


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_knn(n, dim, n_queries, k, seed):
    rng = np.random.default_rng(seed)
    centroids = 3.0 * rng.normal(size=(10, dim))
    data = centroids[rng.integers(0, 10, n)] + rng.normal(size=(n, dim))
    queries = centroids[rng.integers(0, 10, n_queries)] + rng.normal(size=(n_queries, dim))

    rows = []
    brute = _purekernels.BruteForceIndex(data)
    brute.query(queries[:10], k)
    t_brute = _time(lambda: brute.query(queries, k))
    rows.append(("knn brute (pure numpy)", t_brute, n_queries / t_brute))

    if kernels.active_lane() == "compiled":
        tree = kernels.make_index(data)
        tree.query(queries[:10], k)
        t_tree = _time(lambda: tree.query(queries, k))
        rows.append(("knn kd-tree (compiled)", t_tree, n_queries / t_tree))
        d2a, ia = tree.query(queries, k)
        d2b, ib = brute.query(queries, k)
        assert np.array_equal(ia, ib), "lanes disagree on neighbour indices"
    return rows


def bench_lee(side, window, seed):
    rng = np.random.default_rng(seed)
    img = rng.random((side, side))

    rows = []
    t_pure = _time(lambda: _purekernels.lee_window_stats(img, window))
    rows.append((f"lee stats {side}x{side} (pure numpy)", t_pure, side * side / t_pure))
    if kernels.active_lane() == "compiled":
        from . import _ckernels

        t_c = _time(lambda: _ckernels.lee_window_stats(img, window))
        rows.append((f"lee stats {side}x{side} (compiled)", t_c, side * side / t_c))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description="kernel lane benchmark")
    parser.add_argument("--n", type=int, default=50_000, help="indexed points")
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--queries", type=int, default=5_000)
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--image-side", type=int, default=512)
    parser.add_argument("--window", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    print(f"active lane: {kernels.active_lane()}")
    rows = bench_knn(args.n, args.dim, args.queries, args.k, args.seed)
    rows += bench_lee(args.image_side, args.window, args.seed)
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'seconds':>9}  {'items/s':>12}")
    for name, seconds, rate in rows:
        print(f"{name:<{width}}  {seconds:9.4f}  {rate:12.0f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
