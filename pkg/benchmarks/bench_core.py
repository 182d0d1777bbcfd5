"""Time the compiled core against the numpy fallback.

    python3 benchmarks/bench_core.py [--N 256] [--repeat 5]

Prints one line per kernel with the best-of-repeat time for each backend,
the speedup, and the max abs difference between their outputs.
"""
import argparse
import timeit

import numpy as np

from nonlocal_spectra import _pycore
from nonlocal_spectra import PeriodicGrid, make_kernel, Coefficient
from nonlocal_spectra.operator import assemble_periodic

try:
    from nonlocal_spectra import _core
except ImportError:
    _core = None


def cases(N):
    rng = np.random.default_rng(0)
    grid = PeriodicGrid(1.0, N)
    J = make_kernel("uniform", halfwidth=1.0)
    a = Coefficient(0.5, (1.0,))
    op = assemble_periodic(J, a, grid)
    W = np.ascontiguousarray(op.W)
    B = W + np.diag(a(grid.x) + 1.0)
    av = a(grid.x)
    u = rng.random(N)
    f, g = rng.random(4 * N), rng.random(4 * N)
    return {
        "direct_convolve": lambda m: m.direct_convolve(f, g, 0.01),
        "window_average": lambda m: m.window_average(u, 17, 0.3, True),
        "power_iterate": lambda m: m.power_iterate(B, np.ones(N), 1.0, 1e-10, 2000)[:2],
        "kpp_monotone": lambda m: m.kpp_monotone(W, av, 1.5 * np.ones(N), 0.25, 1e-10, 200_000, -1, 0.0, 1e-12)[:4],
    }


def _flat(r):
    if isinstance(r, tuple):
        return np.concatenate([np.ravel(x) for x in r])
    return np.ravel(r)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        print("compiled core not built; only the python backend is available")
    print(f"{'kernel':<16} {'python [s]':>12} {'cython [s]':>12} {'speedup':>8} {'max diff':>10}")
    for name, fn in cases(args.N).items():
        tp = min(timeit.repeat(lambda: fn(_pycore), number=1, repeat=args.repeat))
        if _core is None:
            print(f"{name:<16} {tp:12.4e} {'-':>12} {'-':>8} {'-':>10}")
            continue
        tc = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat))
        diff = np.abs(_flat(fn(_pycore)) - _flat(fn(_core))).max()
        print(f"{name:<16} {tp:12.4e} {tc:12.4e} {tp / tc:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
