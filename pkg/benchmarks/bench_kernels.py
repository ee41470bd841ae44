"""Compare the numba and numpy flavours of the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 20]

Both flavours are called explicitly, so MEMS_SIM_NUMBA does not matter here.
A full potential solve and one IMEX step are timed with whichever backend
the environment selects.
"""

import argparse
import time

import numpy as np

from mems_sim import MappedGrid, ModelParams, backend_name, kernels, solve_potential
from mems_sim.elliptic import map_coefficients


def best_of(fn, repeat):
    fn()  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def assembly_case(n_x, n_eta):
    grid = MappedGrid.create(n_x, n_eta)
    u = -0.4 * np.cos(0.5 * np.pi * grid.base.x)
    A, B, C = map_coefficients(u, grid, 0.1)
    f = np.zeros(grid.shape)
    return (A, B, C, 0.01, grid.base.h, grid.deta, f, grid.eta)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    opts = ap.parse_args()

    print(f"{'kernel':<28}{'size':>12}{'numba [ms]':>14}{'numpy [ms]':>14}{'speed-up':>10}")
    for n_x, n_eta in ((101, 51), (201, 101), (401, 201)):
        args = assembly_case(n_x, n_eta)
        tn = best_of(lambda: kernels.assemble_potential_numba(*args), opts.repeat)
        tp = best_of(lambda: kernels.assemble_potential_numpy(*args), opts.repeat)
        print(f"{'nine-point assembly':<28}{f'{n_x}x{n_eta}':>12}{tn * 1e3:14.3f}{tp * 1e3:14.3f}{tp / tn:10.1f}")

    rng = np.random.default_rng(0)
    for n in (201, 2001, 20001):
        off = np.full(n, -1.0)
        diag = 2.5 + rng.random(n)
        rhs = rng.normal(size=n)
        tn = best_of(lambda: kernels.tridiagonal_numba(off, diag, off, rhs), opts.repeat)
        tp = best_of(lambda: kernels.tridiagonal_numpy(off, diag, off, rhs), opts.repeat)
        print(f"{'tridiagonal solve':<28}{n:>12}{tn * 1e3:14.3f}{tp * 1e3:14.3f}{tp / tn:10.1f}")

    grid = MappedGrid.create(201, 101)
    u = -0.4 * np.cos(0.5 * np.pi * grid.base.x)
    t = best_of(lambda: solve_potential(u, ModelParams(14.0, 0.1), grid), max(3, opts.repeat // 4))
    print(f"\nfull potential solve 201x101 with the {backend_name()} backend: {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
