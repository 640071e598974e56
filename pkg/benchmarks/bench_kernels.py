"""Compiled versus numpy lattice kernels.

    python3 benchmarks/bench_kernels.py [--n 64 128 256] [--repeat 3]

Prints one row per kernel and resolution with the best-of-``repeat`` wall
time of each backend, the speedup and the relative difference of results.
"""
import argparse
import math
import time

import numpy as np

from mbkdv import kernels
from mbkdv.grid import Field, SpectralGrid
from mbkdv.multipliers import MultiplierProfile, m1_eval, m2_eval
from mbkdv.resonance import TAU, sigma3_limits


def _inputs(n, seed=0):
    grid = SpectralGrid(2 * math.pi, n)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(4):
        f = Field.from_physical(grid, rng.standard_normal(n))
        out.append(np.ascontiguousarray(f.band()))
    return grid, out


def _best(fn, repeat):
    best = math.inf
    val = None
    for _ in range(repeat):
        t = time.perf_counter()
        val = fn()
        best = min(best, time.perf_counter() - t)
    return best, val


def cases(n):
    grid, (a, b, c, d) = _inputs(n)
    xi = grid.band_xi()
    prof = MultiplierProfile(0.75, 4.0)
    x1, x2 = np.meshgrid(xi, xi, indexing="ij")
    T = np.ascontiguousarray(np.cos(x1) * np.exp(-0.01 * x2 ** 2))
    F = xi ** 3 * m1_eval(prof, xi) ** 2
    G = 4.0 * xi ** 3 * m2_eval(prof, xi) ** 2
    limd, lim0 = sigma3_limits(prof, xi)
    W = np.ascontiguousarray(np.sin(x1) * x2)
    yield "lambda3_table", lambda mod: mod.lambda3_table(T, a, b, c)
    yield "lambda3_sigma", lambda mod: mod.lambda3_sigma(xi, F, G, limd, lim0, prof.N,
                                                         prof.N / 2, TAU, a, b, c)
    if n <= 256:
        yield "lambda4_pair", lambda mod: mod.lambda4_pair(W, 1, a, b, c, d)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"compiled backend available: {kernels.BACKEND == 'compiled'}")
    print(f"{'kernel':<15}{'n':>6}{'compiled s':>13}{'python s':>12}{'speedup':>10}{'rel diff':>11}")
    for n in args.n:
        for name, call in cases(n):
            tp, vp = _best(lambda: call(kernels.python_backend), args.repeat)
            if kernels.BACKEND == "compiled":
                tc, vc = _best(lambda: call(kernels._impl), args.repeat)
                diff = abs(vc - vp) / max(abs(vp), 1e-300)
                print(f"{name:<15}{n:>6}{tc:>13.4g}{tp:>12.4g}{tp / tc:>10.1f}{diff:>11.1e}")
            else:
                print(f"{name:<15}{n:>6}{'-':>13}{tp:>12.4g}{'-':>10}{'-':>11}")


if __name__ == "__main__":
    main()
