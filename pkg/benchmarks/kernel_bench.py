"""Compare the compiled kernels against the pure NumPy fallback.

Times the residual/Jacobian assembly kernels and the rank-one update
primitives on a few problem sizes, then a composed quasi-Newton update
step.  Run as ``python benchmarks/kernel_bench.py``; pass --reps to
change the repeat count.
"""

import argparse
import time

import numpy as np

from polyqn.backend import available_backends
from polyqn.polysys import random_system


def _best_of(reps, fn):
    best = float("inf")
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best * 1e6


def bench_system(n, reps):
    system = random_system(n, 3, 4 * n, seed=n)
    rng = np.random.default_rng(n)
    x = rng.uniform(-1.0, 1.0, n)
    jac = rng.standard_normal((n, n))
    u = rng.standard_normal(n)
    v = rng.standard_normal(n)
    blocks = [system.block(m) for m in range(1, system.max_degree + 1)]

    rows = {}
    for name, mod in available_backends().items():
        def eval_all():
            for rows_m, varmat, coeffs in blocks:
                mod.eval_terms(rows_m, varmat, coeffs, x)

        def jac_all():
            out = np.zeros((n, n))
            for rows_m, varmat, coeffs in blocks:
                mod.jac_terms(rows_m, varmat, coeffs, x, out)

        def update_step():
            # shape of one rank-one update: two matvecs, a dot, an outer add
            w = mod.matvec(jac, u)
            mod.vecmat(v, jac)
            d = mod.vdot(u, v)
            mod.add_scaled_outer(jac, 1.0 / d, w, v)

        rows[name] = (
            _best_of(reps, eval_all),
            _best_of(reps, jac_all),
            _best_of(reps, lambda: mod.matvec(jac, u)),
            _best_of(reps, lambda: mod.add_scaled_outer(jac, 0.5, u, v)),
            _best_of(reps, update_step),
        )
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 50, 200])
    args = ap.parse_args()

    names = list(available_backends())
    if len(names) < 2:
        print(f"only one backend present ({names[0]}); nothing to compare")
    header = f"{'n':>5} {'kernel':<18}" + "".join(f"{b:>12}" for b in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    labels = ["eval_terms", "jac_terms", "matvec", "add_scaled_outer", "update_step"]
    for n in args.sizes:
        rows = bench_system(n, args.reps)
        for i, label in enumerate(labels):
            line = f"{n:>5} {label:<18}"
            vals = [rows[b][i] for b in names]
            line += "".join(f"{v:>10.1f}us" for v in vals)
            if len(vals) == 2:
                line += f"{vals[0] / vals[1]:>9.2f}x"
            print(line)
        print()


if __name__ == "__main__":
    main()
