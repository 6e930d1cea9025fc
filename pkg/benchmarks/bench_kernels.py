"""Compare the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N wall time per kernel and backend. Numba compile time
is excluded by a warm-up call.
"""
import argparse
import time

import numpy as np

from vrteleop import kernels
from vrteleop.kinematics import EPS_REACH, EPS_SINGULAR, ArmModel
from vrteleop.trajgen import ARRIVAL_TOL


def best_of(fn, repeat):
    fn()  # warm-up (jit compile, caches)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    model = ArmModel()
    q = rng.uniform(model.lower, model.upper, (10_000, 7))
    pos, rot = kernels.np.fk_batch(q, model.links)
    psi = np.zeros(10_000)
    br = np.ones((10_000, 3))
    ik_args = (pos, rot, psi, br, model.links, model.lower, model.upper, EPS_REACH, EPS_SINGULAR)

    B, J = 10_000, 7
    p0, pf = rng.uniform(-2, 2, (2, B, J))
    vmax, amax = np.full(J, 1.0), np.full(J, 2.0)
    zeros = np.zeros((B, J))

    Bs, K, N = 100, 4, 10_000
    sp0 = rng.uniform(-1, 1, (Bs, J))
    tp = rng.uniform(-1, 1, (Bs, K, J))
    ticks = np.sort(rng.integers(0, 8000, (Bs, K)), axis=1)
    sim_args = (sp0, np.zeros((Bs, J)), tp, np.zeros((Bs, K, J)), ticks, N, 0.001, vmax, amax,
                ARRIVAL_TOL)

    return {
        "fk_batch (10k)": lambda m: m.fk_batch(q, model.links),
        "ik_batch (10k)": lambda m: m.ik_batch(*ik_args),
        "arm_angle_batch (10k)": lambda m: m.arm_angle_batch(q, model.links, EPS_SINGULAR),
        "plan (10k x 7)": lambda m: m.plan(p0, zeros, pf, zeros, vmax, amax),
        "simulate (100 x 10k ticks)": lambda m: m.simulate(*sim_args),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.nb is None:
        raise SystemExit("numba is not installed; install the 'fast' extra to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, fn in cases(rng).items():
        t_nb = best_of(lambda: fn(kernels.nb), args.repeat)
        t_np = best_of(lambda: fn(kernels.np), args.repeat)
        print(f"{name:<28}{t_nb * 1e3:>10.2f}ms{t_np * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
