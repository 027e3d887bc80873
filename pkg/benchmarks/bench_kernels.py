"""Time the compiled and pure-Python OA-ITROX loops on identical workloads.

Usage: python3 benchmarks/bench_kernels.py [--iters 2000] [--repeat 3]

Both backends start from the same sequence with eps=0, so they run the same
number of iterations; the final sequences are compared to confirm parity.
"""

import argparse
import time

import numpy as np

from olaz import kernel
from olaz.afcore import AmbiguityZone, random_unimodular

CASES = [(32, AmbiguityZone(8, 0.2, 0.2)), (64, AmbiguityZone(16, 0.2, 0.2)),
         (128, AmbiguityZone(32, 0.2, 0.2)), (128, AmbiguityZone(8, 4, 1))]


def time_loop(loop, a0, zone, iters, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = loop(a0, zone.Z, zone.M, float(zone.f_delta), iters, 0.0, 500, 1e-10, iters)
        best = min(best, time.perf_counter() - t0)
    return best, np.asarray(out[0])


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    print(f"backends: {sorted(kernel.LOOPS)} (default {kernel.BACKEND})")
    print(f"{'N':>4} {'Z':>3} {'M':>3} {'backend':>9} {'us/iter':>10} {'speedup':>8} {'max|diff|':>10}")
    for N, zone in CASES:
        a0 = random_unimodular(N, np.random.default_rng(0))
        py_t, py_a = time_loop(kernel.LOOPS["python"], a0, zone, args.iters, args.repeat)
        print(f"{N:>4} {zone.Z:>3} {zone.M:>3} {'python':>9} {1e6 * py_t / args.iters:>10.1f} {'1.00':>8} {'':>10}")
        if "compiled" in kernel.LOOPS:
            c_t, c_a = time_loop(kernel.LOOPS["compiled"], a0, zone, args.iters, args.repeat)
            diff = np.max(np.abs(c_a - py_a))
            print(f"{N:>4} {zone.Z:>3} {zone.M:>3} {'compiled':>9} {1e6 * c_t / args.iters:>10.1f} "
                  f"{py_t / c_t:>8.2f} {diff:>10.1e}")


if __name__ == "__main__":
    main()
