"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--M 2000] [--repeat 7]

Also checks that both paths return the same numbers before timing them.
"""

import argparse
import timeit

import numpy as np

from critmin import kernels
from critmin.energy import ProblemParams, field_from_function, make_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args()
    if kernels.numba is None:
        raise SystemExit("numba is not installed; only the numpy path is available")

    p = ProblemParams(4, 2.0, 1.0)
    g = make_grid(p, args.M, 3.0)
    u = field_from_function(g, lambda r: (1 + 50 * r * r) ** -1.0)
    r, v = g.r, u.values
    n, beta, k, q = p.n, p.beta, p.k, p.q
    diag, off = kernels.stiffness_numpy(r, v, n, beta, k)
    rhs = np.random.default_rng(0).normal(size=len(diag))

    cases = [
        ("energy_sums", lambda: kernels.energy_sums_numpy(r, v, n, beta, k, q), lambda: kernels.energy_sums_numba(r, v, n, beta, k, q)),
        ("gradient", lambda: kernels.gradient_numpy(r, v, n, beta, k, q), lambda: kernels.gradient_numba(r, v, n, beta, k, q)),
        ("stiffness", lambda: kernels.stiffness_numpy(r, v, n, beta, k), lambda: kernels.stiffness_numba(r, v, n, beta, k)),
        ("cell_lq", lambda: kernels.cell_lq_numpy(r, v, n, q), lambda: kernels.cell_lq_numba(r, v, n, q)),
        ("tridiag_solve", lambda: kernels.tridiag_solve_numpy(diag, off, rhs), lambda: kernels.tridiag_solve_numba(diag, off, rhs)),
    ]
    print(f"M={args.M}, best of {args.repeat}")
    print(f"{'kernel':<14} {'numpy [us]':>12} {'numba [us]':>12} {'speed-up':>9}  max rel diff")
    for name, f_np, f_nb in cases:
        a, b = f_np(), f_nb()  # also triggers compilation
        a = np.concatenate([np.ravel(x) for x in (a if isinstance(a, tuple) else (a,))])
        b = np.concatenate([np.ravel(x) for x in (b if isinstance(b, tuple) else (b,))])
        diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))
        loops = 20
        t_np = min(timeit.repeat(f_np, number=loops, repeat=args.repeat)) / loops * 1e6
        t_nb = min(timeit.repeat(f_nb, number=loops, repeat=args.repeat)) / loops * 1e6
        print(f"{name:<14} {t_np:12.1f} {t_nb:12.1f} {t_np / t_nb:9.2f}  {diff:.1e}")


if __name__ == "__main__":
    main()
