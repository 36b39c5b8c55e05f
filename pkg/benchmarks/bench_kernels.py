"""Compare the compiled and numpy advection kernels, and time a full tendency.

Usage::

    python3 benchmarks/bench_kernels.py [--m 4 8 12 16 24] [--repeat 200] [--json out.json]
"""

import argparse
import json
import time

import numpy as np

from anelastic import kernels
from anelastic.density import RegularizedVacuum
from anelastic.galerkin import GalerkinModel
from anelastic.spectral import enforce_reality


def random_state(m, seed=0):
    rng = np.random.default_rng(seed)
    shape = (2 * m + 1, m + 1)
    v = enforce_reality(rng.normal(size=shape) + 1j * rng.normal(size=shape))
    w = enforce_reality(rng.normal(size=shape) + 1j * rng.normal(size=shape))
    w[:, 0] = 0
    return v, w


def best_of(fn, repeat, rounds=5):
    """Best mean time per call over ``rounds`` batches of ``repeat`` calls."""
    fn()
    best = np.inf
    for _ in range(rounds):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, nargs="+", default=[4, 8, 12, 16, 24])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)

    rows = []
    print(f"backends available: {', '.join(kernels.BACKENDS)}; compiled used for m <= {kernels.COMPILED_MAX_M}")
    print(f"{'m':>4} {'backend':>8} {'advect [ms]':>12} {'max diff':>10}")
    for m in args.m:
        v, w = random_state(m)
        ref = kernels.advect(v, w, backend="numpy")
        for backend in kernels.BACKENDS:
            t = best_of(lambda: kernels.advect(v, w, backend=backend), args.repeat)
            got = kernels.advect(v, w, backend=backend)
            diff = max(float(np.abs(a - b).max()) for a, b in zip(got, ref))
            rows.append({"m": m, "backend": backend, "advect_ms": 1e3 * t, "max_diff": diff})
            print(f"{m:>4} {backend:>8} {1e3 * t:>12.4f} {diff:>10.1e}")
        model = GalerkinModel(RegularizedVacuum(2.0, 0.125), m)
        vp, wp, _ = model.project(v, w)
        t = best_of(lambda: model.tendency(vp, wp), max(1, args.repeat // 4))
        rows.append({"m": m, "backend": "tendency", "advect_ms": 1e3 * t, "max_diff": 0.0})
        print(f"{m:>4} {'tendency':>8} {1e3 * t:>12.4f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
