"""Compare the numba and pure-numpy log-density kernels.

Usage: python3 benchmarks/bench_kernels.py [--n 30] [--d 5] [--points 20000]
"""

import argparse
import time

import numpy as np

from gpdopt import _accel, gp, objectives


def timed(fn, repeat=3):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=30, help="dataset size")
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    obj = objectives.example5(d=args.d)[0]
    X = rng.uniform(-2, 2, size=(args.n, args.d))
    cache = gp.build_cache(gp.Dataset.from_objective(obj, X), gp.GpHyperParams.default(args.d))
    P = rng.uniform(-2, 2, size=(args.points, args.d))

    t_np, (v_np, _) = timed(lambda: gp.log_density_batch(cache, P, use_numba=False))
    print(f"numpy : {t_np:8.3f} s  ({args.points / t_np:10.0f} points/s)")
    if not _accel.HAVE_NUMBA:
        print("numba : not installed")
        return
    gp.log_density_batch(cache, P[:10], use_numba=True)  # compile
    t_nb, (v_nb, _) = timed(lambda: gp.log_density_batch(cache, P, use_numba=True))
    print(f"numba : {t_nb:8.3f} s  ({args.points / t_nb:10.0f} points/s)")
    print(f"speedup {t_np / t_nb:.1f}x, max |diff| {np.max(np.abs(v_np - v_nb)):.2e}")

    # scalar path used inside the chain
    k = min(args.points, 2000)
    for name, flag in (("numpy ", False), ("numba ", True)):
        f = gp.point_evaluator(cache, use_numba=flag)
        f(P[0])
        t, _ = timed(lambda: [f(x) for x in P[:k]])
        print(f"{name} scalar: {t / k * 1e6:8.1f} us/point")


if __name__ == "__main__":
    main()
