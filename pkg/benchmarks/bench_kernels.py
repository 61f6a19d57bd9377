"""Time the compiled kernels against the numpy fallback on typical problem sizes.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends are checked for
agreement before timing.
"""
import argparse
import timeit

import numpy as np

from scents import _pykernels
from scents.spline import make_basis

try:
    from scents import _ckernels
except ImportError:
    _ckernels = None


def _lasso_problem(n, p, seed=0):
    rng = np.random.default_rng(seed)
    X = np.asfortranarray(rng.standard_normal((n, p)))
    beta = np.zeros(p)
    beta[:5] = 1.0
    y = X @ beta + rng.standard_normal(n)
    return X, y


def bench(repeat=5):
    rng = np.random.default_rng(1)
    basis = make_basis(2.0, 12)
    xs = rng.uniform(-2.0, 2.0, 20_000)
    X, y = _lasso_problem(100, 1000)
    lam = 0.1 * np.max(np.abs(X.T @ y)) / X.shape[0]
    w = np.ones(X.shape[1])

    def run_lasso(mod):
        beta = np.zeros(X.shape[1])
        mod.lasso_cd(X, y, lam, w, beta, 10_000, 1e-8)
        return beta

    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
        B_py, dB_py = _pykernels.bspline_design(basis.knots, 3, xs)
        B_c, dB_c = _ckernels.bspline_design(basis.knots, 3, xs)
        assert np.allclose(B_py, B_c, atol=1e-13) and np.allclose(dB_py, dB_c, atol=1e-11)
        assert np.allclose(run_lasso(_pykernels), run_lasso(_ckernels), atol=1e-10)

    rows = []
    for name, mod in backends:
        t_basis = min(timeit.repeat(lambda: mod.bspline_design(basis.knots, 3, xs), number=1, repeat=repeat))
        t_lasso = min(timeit.repeat(lambda: run_lasso(mod), number=1, repeat=repeat))
        rows.append((name, t_basis, t_lasso))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rows = bench(args.repeat)
    print(f"{'backend':<8} {'B-spline 20000 pts (s)':>24} {'LASSO 100x1000 (s)':>20}")
    for name, tb, tl in rows:
        print(f"{name:<8} {tb:>24.5f} {tl:>20.5f}")
    if len(rows) == 2:
        print(f"speedup  {rows[0][1] / rows[1][1]:>24.1f}x {rows[0][2] / rows[1][2]:>19.1f}x")


if __name__ == "__main__":
    main()
