"""Time the Pauli tracker step with the compiled and the numpy kernels.

Usage: python3 benchmarks/bench_step.py [--sites 10000 20000] [--steps 200]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qwire import kernels


def time_backend(backend, n: int, steps: int, repeats: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    best = float("inf")
    for _ in range(repeats):
        x = rng.integers(0, 2, n, dtype=np.uint8)
        z = rng.integers(0, 2, n, dtype=np.uint8)
        t0 = time.perf_counter()
        backend.steps_inplace(x, z, steps)
        best = min(best, time.perf_counter() - t0)
    return best / steps


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sites", type=int, nargs="+", default=[10_000, 20_000])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = [("python", kernels.python_backend)]
    if kernels.compiled_backend is not None:
        backends.insert(0, ("cython", kernels.compiled_backend))
    else:
        print("compiled extension not built; timing the numpy kernels only")

    print(f"{'backend':<8} {'sites':>8} {'us/step':>10} {'mirror s':>10}")
    per = {}
    for name, be in backends:
        for n in args.sites:
            t = time_backend(be, n, args.steps, args.repeats, args.seed)
            per[name, n] = t
            print(f"{name:<8} {n:>8} {t * 1e6:>10.2f} {t * (n + 1):>10.3f}")
    if len(args.sites) >= 2:
        a, b = args.sites[0], args.sites[1]
        for name, _ in backends:
            print(f"{name}: per-step ratio {b}/{a} = {per[name, b] / per[name, a]:.2f}")
    if len(backends) == 2:
        for n in args.sites:
            print(f"speedup at {n}: {per['python', n] / per['cython', n]:.1f}x")


if __name__ == "__main__":
    main()
