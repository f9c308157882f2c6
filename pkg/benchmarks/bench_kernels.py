"""Compiled vs numpy matrix-product kernels.

    python benchmarks/bench_kernels.py --samples 64 --length 20000 --window 43

Prints one CSV row per (kernel, backend) with the best-of-``repeat`` time
and the largest absolute difference from the numpy result.
"""
import argparse
import sys
import time

import numpy as np

from folnerlab import _fallback

try:
    from folnerlab import _kernels
except ImportError:
    _kernels = None


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--length", type=int, default=20_000)
    ap.add_argument("--window", type=int, default=43)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    mats = np.array([[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]])
    words = rng.integers(0, 2, size=(args.samples, args.length))
    cases = {
        "product_lognorms": lambda mod: mod.product_lognorms(mats, words),
        "prefix_lognorms": lambda mod: mod.prefix_lognorms(mats, words),
        "window_lognorms": lambda mod: mod.window_lognorms(mats, words, args.window),
    }
    if _kernels is None:
        print("compiled extension not built; timing numpy only", file=sys.stderr)
    print("kernel,backend,seconds,speedup,max_abs_diff")
    for name, call in cases.items():
        t_np, ref = best_time(lambda: call(_fallback), args.repeat)
        print(f"{name},numpy,{t_np:.6f},1.0,0")
        if _kernels is not None:
            t_cy, out = best_time(lambda: call(_kernels), args.repeat)
            print(f"{name},cython,{t_cy:.6f},{t_np / t_cy:.2f},{np.abs(out - ref).max():.3e}")


if __name__ == "__main__":
    main()
