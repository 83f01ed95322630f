"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--p 200] [--n 400] [--repeat 3]
"""

import argparse
import time

import numpy as np

from ggminfer import _fallback

try:
    from ggminfer import _kernels
except ImportError:  # extension not built
    _kernels = None


def _lasso_problem(n, p, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:5] = [2.0, -1.5, 1.0, 0.5, -0.5]
    y = x @ beta + rng.standard_normal(n)
    xs = x / np.sqrt(np.sum(x * x, axis=0) / n)
    gram = np.ascontiguousarray(xs.T @ xs / n)
    return gram, xs.T @ y / n


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench_lasso(mod, gram, xty, repeat):
    p = gram.shape[0]
    cols = np.arange(p, dtype=np.intp)

    def run():
        coef, q = np.zeros(p), np.zeros(p)
        mod.lasso_cd(gram, xty, cols, coef, q, 0.05, 1e-10, 100_000)

    return _time(run, repeat)


def bench_jacobi(mod, a, repeat):
    return _time(lambda: mod.jacobi_eigen(a.copy(), 1e-12, 100), repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--p", type=int, default=200)
    ap.add_argument("--eig", type=int, default=60, help="dimension of the eigenproblem")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    gram, xty = _lasso_problem(args.n, args.p, 0)
    rng = np.random.default_rng(1)
    b = rng.standard_normal((args.eig, args.eig))
    sym = np.ascontiguousarray((b + b.T) / 2)

    mods = [("python", _fallback)] + ([("cython", _kernels)] if _kernels is not None else [])
    res = {}
    for name, mod in mods:
        res[name] = (bench_lasso(mod, gram, xty, args.repeat), bench_jacobi(mod, sym, args.repeat))
        print(f"{name:7s} lasso_cd p={args.p}: {res[name][0] * 1e3:9.2f} ms   "
              f"jacobi d={args.eig}: {res[name][1] * 1e3:9.2f} ms")
    if "cython" in res:
        sp = [a / b for a, b in zip(res["python"], res["cython"])]
        print(f"speedup lasso_cd x{sp[0]:.1f}, jacobi x{sp[1]:.1f}")
    else:
        print("compiled kernels unavailable; only the fallback was timed")


if __name__ == "__main__":
    main()
