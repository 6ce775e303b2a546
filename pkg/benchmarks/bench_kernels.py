#!/usr/bin/env python3
"""Benchmark the compiled kernel against the pure-numpy fallback.

Times the sorted cell-summary kernel across sizes, then a full subsampling
prediction interval with each backend patched into the geometry module.

Usage: python benchmarks/bench_kernels.py [--reps 2000] [--pi-b 200]
"""

import argparse
import time

import numpy as np

import cneigh.geometry as geometry
from cneigh.geometry import DesignSample, unit_cube
from cneigh.infer import SubsampleConfig, subsample_pi
from cneigh.integrate import IntegrandEvaluations
from cneigh.kernels import available_backends


def kernel_inputs(rng, m):
    t = np.sort(rng.random(m))
    mids = (t[:-1] + t[1:]) / 2.0
    bnd = np.concatenate([[0.0], mids, [1.0]])
    skip = (t[:-2] + t[2:]) / 2.0 if m > 2 else np.empty(0)
    return t, bnd, skip


def time_call(fn, args, reps):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps


def bench_kernel(backends, reps):
    sizes = [64, 256, 1024, 4096, 16384, 100_000]
    rng = np.random.default_rng(0)
    print(f"{'M':>8s}" + "".join(f"{name:>14s}" for name in backends) + f"{'speedup':>10s}")
    for m in sizes:
        args = kernel_inputs(rng, m)
        times = {name: time_call(fn, args, max(1, reps // max(1, m // 256)))
                 for name, fn in backends.items()}
        row = f"{m:8d}"
        for name in backends:
            row += f"{times[name] * 1e6:12.1f}us"
        if len(times) == 2:
            row += f"{times['python'] / times['compiled']:9.1f}x"
        print(row)


def bench_interval(backends, b_reps):
    rng = np.random.default_rng(1)
    pts = rng.random(200)
    ev = IntegrandEvaluations(DesignSample(unit_cube(1), pts), np.sin(6 * pts))
    cfg = SubsampleConfig(beta=0.5, B=b_reps, seed=3)
    print(f"\nsubsampling interval, M=200, B={b_reps}:")
    results = {}
    original = geometry.loo_cell_summary_sorted
    try:
        for name, fn in backends.items():
            geometry.loo_cell_summary_sorted = fn
            t0 = time.perf_counter()
            iv = subsample_pi(ev, "unbiased-loo", cfg, 0.05)
            results[name] = (time.perf_counter() - t0, iv)
            print(f"  {name:10s} {results[name][0] * 1e3:8.1f} ms")
    finally:
        geometry.loo_cell_summary_sorted = original
    if len(results) == 2:
        a, b = results["python"][1], results["compiled"][1]
        assert (a.lower, a.point, a.upper) == (b.lower, b.point, b.upper), \
            "backends disagree"
        print(f"  identical intervals; speedup "
              f"{results['python'][0] / results['compiled'][0]:.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=2000)
    parser.add_argument("--pi-b", type=int, default=200)
    args = parser.parse_args()
    backends = available_backends()
    print("available backends:", ", ".join(backends))
    bench_kernel(backends, args.reps)
    bench_interval(backends, args.pi_b)


if __name__ == "__main__":
    main()
