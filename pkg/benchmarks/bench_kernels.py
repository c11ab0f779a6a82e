"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--quick] [--repeat 3]

Both variants are called directly, so one process measures both; the
numba timings exclude compilation (one warm-up call per shape).
"""
import argparse
import time

import numpy as np

from quasidiff import kernels
from quasidiff._accel import USING_NUMBA
from quasidiff.generators import CPSSpec, gen_fibonacci_model_set, gen_rudin_shapiro


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(quick):
    scale = 4 if quick else 1
    fib = gen_fibonacci_model_set(CPSSpec.fibonacci(), (-10**4 // scale, 10**4 // scale))
    rs = gen_rudin_shapiro((0, 2**14 // scale))
    yield ("exp_sum uniform grid", "fibonacci", fib.local_positions(), fib.weights, np.linspace(0.1, 20, 2000 // scale))
    yield ("exp_sum uniform grid", "rs", rs.local_positions(), rs.weights, np.linspace(0, 1, 257))
    rng = np.random.default_rng(0)
    yield ("exp_sum scattered k", "fibonacci", fib.local_positions(), fib.weights,
           np.sort(rng.uniform(0, 20, 500 // scale)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not USING_NUMBA:
        raise SystemExit("numba is disabled (QUASIDIFF_DISABLE_NUMBA); nothing to compare")

    print(f"{'kernel':<22} {'input':<10} {'N x G':>14} {'numpy s':>10} {'numba s':>10} {'speedup':>8} {'max |diff|':>11}")
    for label, name, x, w, k in cases(args.quick):
        nb = kernels._nb_exp_sum_uniform if kernels.is_uniform(k) else kernels._nb_exp_sum
        t_np = best_of(lambda: kernels._np_exp_sum(x, w, k), args.repeat)
        t_nb = best_of(lambda: nb(x, w, k), args.repeat)
        diff = np.max(np.abs(kernels._np_exp_sum(x, w, k) - nb(x, w, k)))
        size = f"{len(x)}x{len(k)}"
        print(f"{label:<22} {name:<10} {size:>14} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x {diff:>11.2e}")

    pts = gen_rudin_shapiro((0, 2**15 if not args.quick else 2**13))
    keys = pts.exact[:, None]
    t_np = best_of(lambda: kernels._np_pairs(pts.positions, keys, pts.weights, 64.0), args.repeat)
    t_nb = best_of(lambda: kernels._nb_pairs(pts.positions, keys, pts.weights, 64.0), args.repeat)
    size = f"{len(pts)} d<=64"
    print(f"{'pairs':<22} {'rs':<10} {size:>14} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x {'-':>11}")


if __name__ == "__main__":
    main()
