"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_backends.py [--quick]

Each kernel runs once per backend to warm up (numba compiles on first use),
then the best of ``--repeat`` timings is reported.
"""
import argparse
import time

import numpy as np

from modelt import _kernels
from modelt._accel import NUMBA_AVAILABLE
from modelt.dynamics import Params, WealthState, run
from modelt.graph import Graph, build_gnp_connected, laplacian


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def ring_with_chords(n, per_vertex, seed=0):
    rng = np.random.default_rng(seed)
    u = np.repeat(np.arange(n), per_vertex)
    v = rng.integers(0, n, size=u.size)
    pairs = np.concatenate([np.column_stack([np.arange(n), (np.arange(n) + 1) % n]),
                            np.column_stack([u, v])])
    pairs = np.sort(pairs[pairs[:, 0] != pairs[:, 1]], axis=1)
    return Graph(n, np.unique(pairs, axis=0))


def cases(quick):
    steps = 20_000 if quick else 200_000
    g_sim = build_gnp_connected(200, 0.05, 1)
    s0 = WealthState(np.random.default_rng(0).uniform(0, 10, g_sim.n))
    p = Params(0.3, 0.9999, 1.0)
    yield (f"run {steps} steps, n=200, summary",
           lambda b: run(s0, g_sim, p, steps, seed=1, record="summary", keep_records=False, backend=b))

    n_jac = 120 if quick else 400
    lap = laplacian(build_gnp_connected(n_jac, 0.1, 2)).astype(float)
    yield f"jacobi, n={n_jac}", lambda b: _kernels.jacobi_eigenvalues(lap, backend=b)

    n_pow = 20_000 if quick else 200_000
    g_pow = ring_with_chords(n_pow, 3)
    indptr, indices = g_pow.csr
    x0 = np.random.default_rng(0).standard_normal(n_pow)
    yield (f"power iteration, ring+chords n={n_pow}",
           lambda b: _kernels.power_lambda_max(indptr, indices, g_pow.degrees, x0, backend=b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numba", "numpy"] if NUMBA_AVAILABLE else ["numpy"]
    print(f"{'kernel':40s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for label, fn in cases(args.quick):
        t = [best_of(lambda: fn(b), args.repeat) for b in backends]
        row = f"{label:40s}" + "".join(f"{x:11.4f}s" for x in t)
        if len(t) == 2:
            row += f"{t[1] / t[0]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
