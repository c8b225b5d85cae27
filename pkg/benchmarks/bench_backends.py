"""Time the compiled and pure-Python mirror-descent loops on the same problem.

    python3 benchmarks/bench_backends.py [--n 80] [--k 15] [--iters 20000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from rkbs_mirror import SolverConfig, fit_matrix
from rkbs_mirror._backend import available_backends


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=80)
    ap.add_argument("--k", type=int, default=15)
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--p", type=float, default=1.33)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    H = rng.random((args.n, args.k))
    Y = rng.standard_normal(args.n)
    cfg = SolverConfig(p=args.p, eta=0.5 / np.linalg.norm(H, 2) ** 2, iterations=args.iters)

    timings, traces = {}, {}
    for name, impl in available_backends().items():
        best = np.inf
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            res = fit_matrix(H, Y, cfg, backend=impl)
            best = min(best, time.perf_counter() - t0)
        timings[name], traces[name] = best, res.trace_array()
        print(f"{name:>7}: {best:8.4f} s  ({best / args.iters * 1e6:7.2f} us/iter)  final loss {res.final_loss:.12g}")
    if len(timings) == 2:
        gap = np.max(np.abs(traces["python"] - traces["cython"]) / (1 + np.abs(traces["python"])))
        print(f"speedup: {timings['python'] / timings['cython']:.1f}x, max relative trace gap {gap:.2e}")


if __name__ == "__main__":
    main()
