#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy/Python fallbacks.

Runs each workload twice in subprocesses, once as-is and once with
DIOLAB_DISABLE_JIT=1, and prints a comparison table.  The fallback path is the
reference implementation; expect it to lose by one to three orders of
magnitude on the scan-heavy kernels.

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time


def workloads():
    import numpy as np

    from diolab.dimfun import PowerLaw
    from diolab.estimators import uniform_samples, window_hits
    from diolab.geometry import equivalence_scan_points
    from diolab.problems import LinearFormsProblem, PsiPowerLaw, SquaresProblem
    from diolab.slicing import window_union_length
    from diolab.estimators import _exact_window_mask

    lf = LinearFormsProblem(2, 1, PsiPowerLaw(2.5))
    sq = SquaresProblem(PsiPowerLaw(3.0))
    pts2 = uniform_samples(1, 20_000, 2)
    g = PowerLaw(0.75)

    def bench(fn, repeat=3):
        fn()  # warm-up (jit compilation)
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        return best

    return {
        "lf_window_hits[20k x |a|<=64]":
            bench(lambda: window_hits(lf, pts2, 1, 64)),
        "squares_window_hits[20k x |a|<=32]":
            bench(lambda: window_hits(sq, pts2, 1, 32)),
        "exact_window_mask[squares R=1024]":
            bench(lambda: _exact_window_mask(sq, 2, 7, 1024)),
        "slice_union_sweep[window 8..31]":
            bench(lambda: window_union_length(
                lambda h: g.eval(float(h) ** -4.0), 8, 31, 0.61803398875, 0.0)),
        "equivalence_scan[200 pts H=30]":
            bench(lambda: equivalence_scan_points(lf, uniform_samples(2, 200, 2), 30)),
    }


def main():
    if os.environ.get("DIOLAB_BENCH_CHILD"):
        print(json.dumps(workloads()))
        return
    results = {}
    for label, env_extra in (("numba", {}), ("fallback", {"DIOLAB_DISABLE_JIT": "1"})):
        env = {**os.environ, "DIOLAB_BENCH_CHILD": "1", **env_extra}
        out = subprocess.run([sys.executable, __file__], env=env,
                             capture_output=True, text=True, check=True)
        results[label] = json.loads(out.stdout.strip().splitlines()[-1])
    print(f"{'kernel':<40} {'numba':>10} {'fallback':>10} {'speedup':>9}")
    for name in results["numba"]:
        jit = results["numba"][name]
        ref = results["fallback"][name]
        print(f"{name:<40} {jit * 1e3:>8.1f}ms {ref * 1e3:>8.1f}ms {ref / jit:>8.1f}x")


if __name__ == "__main__":
    main()
