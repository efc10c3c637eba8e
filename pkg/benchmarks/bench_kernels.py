"""Compare the compiled and numpy kernels on repetition-level workloads.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--n2 20 40 60]

For each outer length the 5-in-n2 entropy is evaluated with both
backends; the table lists the best wall time of each, the speed-up and
the largest difference between the two results.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from paulithresh import kernels
from paulithresh.channel import NoiseFamily
from paulithresh.concat import exact_n1_in_n2_entropy, n1_in_n2_work


def best_time(fn, repeat: int) -> tuple[float, float]:
    best, val = np.inf, np.nan
    for _ in range(repeat):
        t0 = time.perf_counter()
        val = fn()
        best = min(best, time.perf_counter() - t0)
    return best, val


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n1", type=int, default=5)
    ap.add_argument("--n2", type=int, nargs="+", default=[10, 20, 40, 60])
    ap.add_argument("--p", type=float, default=0.0637)
    args = ap.parse_args(argv)

    try:
        kernels.backend("cython")
    except ImportError:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
        return 1

    c = NoiseFamily.depolarizing()(args.p)
    print(f"{'n1':>3} {'n2':>4} {'cells':>12} {'cython [s]':>11} {'numpy [s]':>10} {'speed-up':>9} {'|diff|':>9}")
    for n2 in args.n2:
        tc, vc = best_time(lambda: exact_n1_in_n2_entropy(args.n1, n2, c, backend="cython"), args.repeat)
        tp, vp = best_time(lambda: exact_n1_in_n2_entropy(args.n1, n2, c, backend="numpy"), args.repeat)
        print(f"{args.n1:>3} {n2:>4} {n1_in_n2_work(args.n1, n2):>12.3g} {tc:>11.4f} {tp:>10.4f} "
              f"{tp / tc:>9.2f} {abs(vc - vp):>9.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
