"""Time the compiled kernels against the numpy reference versions.

    python3 bench/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from toruslab import _kernels_py

try:
    from toruslab import _ckernels
except ImportError:
    _ckernels = None


def _random_unimodular(rng, count, n):
    b = rng.normal(size=(count, n, n))
    return b / np.abs(np.linalg.det(b))[:, None, None] ** (1.0 / n)


def cases(rng):
    bases = _random_unimodular(rng, 200, 3)
    yield "lll x200 (n=3)", lambda k: [k.lll(b) for b in bases]
    yield "enumerate_ball r=3 x200", lambda k: [k.enumerate_ball(b, 3.0) for b in bases]
    yield "shortest_lengths x200", lambda k: k.shortest_lengths(bases)
    yield "siegel_suite x200, 6 functions", lambda k: k.siegel_suite(
        bases, [0.6, 0.8, 1.0, 1.2], [[0.5, 0.0, 0.0], [0.0, 1.0, 0.0]], [0.3, 0.4])
    yield "charpoly3_matrices X^3-X-1 h=6", lambda k: k.charpoly3_matrices(0, -1, -1, 6)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; run `python3 setup.py build_ext --inplace`")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':36s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for name, fn in cases(rng):
        row = []
        for impl in (_kernels_py, _ckernels):
            if impl is None:
                row.append(float("nan"))
                continue
            best = float("inf")
            for _ in range(args.repeat):
                t = time.perf_counter()
                fn(impl)
                best = min(best, time.perf_counter() - t)
            row.append(best)
        print(f"{name:36s} {row[0]:10.4f} {row[1]:10.4f} {row[0] / row[1]:8.1f}")


if __name__ == "__main__":
    main()
