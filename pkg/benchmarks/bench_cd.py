"""Time the coordinate-descent sweep kernels against each other.

    python3 benchmarks/bench_cd.py [--n 4000] [--p 200] [--repeats 5]

Reports wall time per full LASSO fit for each available backend and checks
that both backends land on the same coefficients.
"""
import argparse
import time

import numpy as np

from sparseglm import kernels, lasso


def bench(backend, x, y, alpha, repeats):
    lasso.fit_arrays(x[:50], y[:50], alpha, backend=backend)  # compile / warm caches
    times, res = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = lasso.fit_arrays(x, y, alpha, backend=backend, tol=1e-9)
        times.append(time.perf_counter() - t0)
    return min(times), res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--p", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    x = np.asfortranarray(rng.standard_normal((args.n, args.p)))
    beta = np.where(rng.random(args.p) < 0.1, rng.normal(0, 2, args.p), 0.0)
    y = x @ beta + rng.standard_normal(args.n)
    alpha = 0.01 * lasso.alpha_max(x, y)

    print(f"n={args.n} p={args.p} alpha={alpha:.4g} repeats={args.repeats}")
    results = {}
    for name in sorted(kernels.BACKENDS):
        best, res = bench(name, x, y, alpha, args.repeats)
        results[name] = res
        print(f"{name:>6}: {best * 1e3:9.2f} ms  sweeps={res.n_sweeps:4d}  "
              f"{best / res.n_sweeps * 1e6:8.1f} us/sweep")
    if len(results) == 2:
        a, b = results.values()
        print(f"max |coef difference| between backends: {np.max(np.abs(a.coef - b.coef)):.3g}")


if __name__ == "__main__":
    main()
