"""Time dense operator assembly with the compiled kernel and the NumPy fallback.

    python benchmarks/bench_assembly.py [--sizes 4 6 8 10] [--threads 1] [--repeat 3]

Sizes are icosphere frequencies (20 * f**2 triangles). Each row reports the
best-of-N wall time per backend, the speedup and the largest relative
difference between the two results.
"""

import argparse
import time

import numpy as np

from dcbem import kernels, shapes
from dcbem.operators import assemble


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8, 10])
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}; threads={args.threads}")
    print(f"{'N':>6} {'cython_s':>10} {'python_s':>10} {'speedup':>8} {'max_rel_diff':>13}")
    for f in args.sizes:
        mesh = shapes.single(shapes.icosphere(1.0, f))
        n = mesh.n_triangles
        t_py, ops_py = best_time(lambda: assemble(mesh, backend="python"), max(1, args.repeat // 2))
        if "cython" in backends:
            t_cy, ops_cy = best_time(lambda: assemble(mesh, threads=args.threads, backend="cython"), args.repeat)
            diff = max(
                np.abs(ops_cy.L - ops_py.L).max() / np.abs(ops_py.L).max(),
                np.abs(ops_cy.Mpv - ops_py.Mpv).max() / np.abs(ops_py.Mpv).max(),
            )
            print(f"{n:>6} {t_cy:>10.3f} {t_py:>10.3f} {t_py / t_cy:>8.1f} {diff:>13.2e}")
        else:
            print(f"{n:>6} {'-':>10} {t_py:>10.3f} {'-':>8} {'-':>13}")


if __name__ == "__main__":
    main()
