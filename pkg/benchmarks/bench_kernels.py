#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the four hot kernels on representative shapes plus one end-to-end
replication workload (sample, fit, error), and prints the speedups.

Run: python benchmarks/bench_kernels.py [--samples 200000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from poureg.backends import available_backends, get_kernels
from poureg.metrics import estimate_expected_error
from poureg.partition import make_dyadic
from poureg.problems import get_problem


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(n, repeats):
    rng = np.random.default_rng(0)
    cases = []
    for d, level in ((1, 6), (2, 3)):
        x = rng.random((n, d))
        y = rng.uniform(-1, 1, n)
        values = rng.random((1 << (level * d)))
        cases.append((f"dyadic_stats d={d} level={level}", "dyadic_stats", (x, y, level)))
        cases.append((f"dyadic_eval  d={d} level={level}", "dyadic_eval", (values, level, x)))
    for d, knots in ((1, 17), (2, 5)):
        x = rng.random((n, d))
        y = rng.uniform(-1, 1, n)
        values = rng.random(knots**d)
        cases.append((f"hat_stats    d={d} knots={knots}", "hat_stats", (x, y, knots)))
        cases.append((f"hat_eval     d={d} knots={knots}", "hat_eval", (values, knots, x)))

    print(f"kernel benchmarks, {n} points, best of {repeats}")
    print(f"{'case':34} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for label, name, args in cases:
        t_py = best_of(repeats, getattr(get_kernels("python"), name), *args)
        t_ext = best_of(repeats, getattr(get_kernels("compiled"), name), *args)
        print(f"{label:34} {t_py * 1e3:9.2f}ms {t_ext * 1e3:9.2f}ms {t_py / t_ext:7.1f}x")


def bench_end_to_end(repeats):
    # the hot paths bind the backend module inside poureg.partition at import
    # time; swap that binding for the duration of each measurement
    import poureg.partition as partition

    problem = get_problem("lipschitz-1d")
    family = make_dyadic(1, 4)

    def run():
        estimate_expected_error(problem, family, m=4096, replications=400, seed=1)

    print("\nend-to-end: 400 replications of fit+error at m=4096, N=16")
    results = {}
    default = partition.kernels
    try:
        for name in ("python", "compiled"):
            partition.kernels = get_kernels(name)
            results[name] = best_of(repeats, run)
    finally:
        partition.kernels = default
    print(
        f"python {results['python']:.3f}s  compiled {results['compiled']:.3f}s  "
        f"speedup {results['python'] / results['compiled']:.2f}x"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    if "compiled" not in available_backends():
        raise SystemExit("compiled backend not built; nothing to compare")
    bench_kernels(args.samples, args.repeats)
    bench_end_to_end(args.repeats)


if __name__ == "__main__":
    main()
