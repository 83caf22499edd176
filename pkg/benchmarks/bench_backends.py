"""Benchmark the compiled solver kernel against the pure-Python fallback.

Runs identical restart workloads through both backends and reports wall time
per restart plus the speedup.  Usage::

    python benchmarks/bench_backends.py [--restarts 200]
"""

import argparse
import math
import time

import numpy as np

from echoroom import SimConfig, echo_matrix
from echoroom._kernels import py_backend

try:
    from echoroom._kernels import _native as native
except ImportError:
    native = None

from echoroom.generators import random_convex_room, random_interior_trajectory


def make_problem(num_walls, num_points, sigma, seed):
    room = random_convex_room(num_walls, seed)
    traj = random_interior_trajectory(room, num_points, seed + 1)
    echo = echo_matrix(room, traj, SimConfig(noise_sigma=sigma, rng_seed=seed))
    return np.array(echo.entries), np.ones((num_points, num_walls))


def starting_point(d, rng):
    n, k = d.shape
    theta = np.concatenate([[0.0], rng.uniform(0, 2 * math.pi, k - 1)])
    q = np.clip(d[0].copy(), 0.0, None)
    rx = np.concatenate([[0.0], rng.uniform(-1, 1, n - 1)])
    ry = np.concatenate([[0.0], d[0, 0] - d[1:, 0]])
    return theta, q, rx, ry


def bench(impl, d, w, starts):
    t0 = time.perf_counter()
    final_costs = []
    for theta, q, rx, ry in starts:
        cost, _, _, _ = impl.run_restart(
            d, w, theta.copy(), q.copy(), rx.copy(), ry.copy(), 500, 1e-14, 500, 1e-10, 64
        )
        final_costs.append(cost)
    return time.perf_counter() - t0, min(final_costs)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--restarts", type=int, default=200)
    args = parser.parse_args()

    cases = [
        ("K=4 N=8  sigma=0.05", 4, 8, 0.05),
        ("K=5 N=8  sigma=0.05", 5, 8, 0.05),
        ("K=4 N=12 sigma=0.00", 4, 12, 0.0),
        ("K=6 N=6  sigma=0.02", 6, 6, 0.02),
    ]

    print(f"{'case':<22}{'python':>12}{'native':>12}{'speedup':>10}   per-restart (native)")
    for name, k, n, sigma in cases:
        d, w = make_problem(k, n, sigma, seed=11)
        rng = np.random.default_rng(3)
        starts = [starting_point(d, rng) for _ in range(args.restarts)]
        t_py, best_py = bench(py_backend, d, w, starts)
        if native is None:
            print(f"{name:<22}{t_py:>11.3f}s{'n/a':>12}{'n/a':>10}")
            continue
        t_nat, best_nat = bench(native, d, w, starts)
        speedup = t_py / t_nat
        per = t_nat / args.restarts * 1e3
        print(f"{name:<22}{t_py:>11.3f}s{t_nat:>11.3f}s{speedup:>9.1f}x   {per:.3f} ms")
        if not math.isclose(best_py, best_nat, rel_tol=1e-6, abs_tol=1e-15):
            print(f"  warning: best costs differ ({best_py:.3e} vs {best_nat:.3e})")

    if native is None:
        print("\ncompiled backend unavailable; install with a C compiler to compare")


if __name__ == "__main__":
    main()
