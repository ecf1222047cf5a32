"""Time the compiled kernels against the numpy fallback on identical inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sixvertex_airy import _purepy
from sixvertex_airy._backend import COMPILED, kernels


def best_of(repeat: int, fn) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def sweep_case(S: int, K: int, M: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    U = rng.random((S, K, M))

    def make():
        return np.ones((S, M), dtype=np.uint8), np.zeros(S, dtype=np.int64), np.zeros((S, K), dtype=np.int64)

    return U, make


def direct_case(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)

    def c(*shape):
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    return [c(n, n) for _ in range(4)] + [1.0 + 0.1 * c(n, n) for _ in range(4)]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not COMPILED:
        print("compiled kernels unavailable; only the fallback can run")
    backends = [("numpy", _purepy)] + ([("cython", kernels)] if COMPILED else [])
    print(f"{'kernel':<32}{'backend':<10}{'seconds':>10}")
    for S, K, M in ((1024, 16, 80), (1024, 16, 320)):
        U, make = sweep_case(S, K, M)
        label = f"sweep_columns S={S} K={K} M={M}"
        results = {}
        for name, mod in backends:
            def go(mod=mod):
                h, e, r = make()
                mod.sweep_columns(U, 0.05, 0.95, h, e, r)
                results[name] = r
            print(f"{label:<32}{name:<10}{best_of(args.repeat, go):>10.4f}")
        if len(results) == 2:
            assert np.array_equal(results["numpy"], results["cython"])
    for n, (N1, N2) in ((8, (2, 1)), (6, (2, 2))):
        arrays = direct_case(n)
        label = f"direct_term_sum n={n} N=({N1},{N2})"
        values = {}
        for name, mod in backends:
            def go(mod=mod, name=name):
                values[name] = mod.direct_term_sum(*arrays, N1, N2)
            print(f"{label:<32}{name:<10}{best_of(args.repeat, go):>10.4f}")
        if len(values) == 2:
            rel = abs(values["numpy"] - values["cython"]) / max(1e-300, abs(values["numpy"]))
            assert rel < 1e-9, rel


if __name__ == "__main__":
    main()
