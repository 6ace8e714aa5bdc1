"""Compiled vs fallback timings for the three hot kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Both flavours are called directly, so the run needs numba and must not set
SPECWASS_DISABLE_JIT. The first compiled call (JIT compile or cache load)
is timed separately and excluded from the per-call figures.
"""
import argparse
import time

import numpy as np

from specwass import kernels
from specwass._jit import JIT_ENABLED
from specwass.core import build_grid_line


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def simplex_case(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.random((2 * n, 2))
    C = np.sqrt(((X[:n, None] - X[None, n:]) ** 2).sum(-1))
    a = rng.random(n) + 0.1
    b = rng.random(n) + 0.1
    a /= a.sum()
    b *= a.sum() / b.sum()

    def run(kernel):
        N = 2 * n - 1
        bi = np.zeros(N, dtype=np.int64)
        bj = np.zeros(N, dtype=np.int64)
        flow, u, v = np.zeros(N), np.zeros(n), np.zeros(n)
        return kernel(C, a, b, 1e-12, bi, bj, flow, u, v)

    return run


def closure_case(n, seed):
    rng = np.random.default_rng(seed)
    D = rng.random((n, n)) * 10.0
    return lambda kernel: kernel(D)


def geodesic_case(n, seed):
    base = build_grid_line(n, 0.0, 1.0)
    D = np.ascontiguousarray(base.dist)
    inv_p = np.ones(n)
    reach = 0.25
    K = kernels.fiber_reach_levels(inv_p, n, reach)
    return lambda kernel: kernel(D, inv_p, n, reach, K, 0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    args = ap.parse_args()
    if not JIT_ENABLED:
        raise SystemExit("JIT disabled (SPECWASS_DISABLE_JIT set or numba missing); nothing to compare")

    sizes = {
        "transport_simplex": [20, 80] if args.quick else [20, 80, 200],
        "metric_closure": [40, 120] if args.quick else [40, 120, 300],
        "grid_geodesic": [17, 33] if args.quick else [17, 33, 65],
    }
    flavours = {
        "transport_simplex": (kernels._transport_simplex_jit, kernels.transport_simplex_py, simplex_case),
        "metric_closure": (kernels._metric_closure_jit, kernels.metric_closure_numpy, closure_case),
        "grid_geodesic": (kernels._grid_geodesic_jit, kernels.grid_geodesic_numpy, geodesic_case),
    }
    print(f"{'kernel':18s} {'size':>5s} {'first_jit_s':>11s} {'jit_ms':>10s} {'fallback_ms':>12s} {'speedup':>8s}")
    for name, (fast, slow, make) in flavours.items():
        for k, n in enumerate(sizes[name]):
            run = make(n, k)
            t0 = time.perf_counter()
            ref = run(fast)
            first = time.perf_counter() - t0
            got = run(slow)
            if name == "grid_geodesic" or name == "metric_closure":
                assert np.allclose(ref, got), f"{name}: flavours disagree"
            else:
                assert ref[0] == got[0] == kernels.OPTIMAL
            tf = best_of(lambda: run(fast), args.repeat)
            ts = best_of(lambda: run(slow), max(1, args.repeat // 2))
            print(f"{name:18s} {n:5d} {first:11.3f} {tf * 1e3:10.3f} {ts * 1e3:12.3f} {ts / tf:8.1f}")


if __name__ == "__main__":
    main()
