"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--n 20] [--count 20000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from spectralpfr import kernels


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n, count, seed):
    rng = np.random.default_rng(seed)
    masks = rng.integers(1, 1 << n, size=count, dtype=np.uint64)
    coords = rng.integers(0, 97, size=(14, 1))
    sub = 0
    for i in rng.choice(n, size=min(12, n), replace=False):
        sub |= 1 << int(i)
    return {
        "cyclic_stats": lambda k: k.cyclic_stats(masks, n),
        "cyclic_canonical": lambda k: k.cyclic_canonical(masks[: count // 4], n),
        "signed_sum_vanishes": lambda k: k.signed_sum_vanishes(coords, np.array([997])),
        "subset_min_sumsets": lambda k: k.subset_min_sumsets(sub, n),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20, help="cyclic group order for the bitmask kernels")
    ap.add_argument("--count", type=int, default=20000, help="number of random subsets")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; nothing to compare")
    print(f"{'kernel':22s} {'cython s':>10s} {'python s':>10s} {'speedup':>9s}")
    for name, fn in cases(args.n, args.count, args.seed).items():
        tc = _time(lambda: fn(kernels.compiled), args.repeat)
        tp = _time(lambda: fn(kernels.pure), args.repeat)
        print(f"{name:22s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
