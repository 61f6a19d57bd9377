"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting ``SCENTS_PURE_PYTHON=1``
forces the NumPy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("SCENTS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def bspline_design(knots, degree, x):
    return _impl.bspline_design(knots, degree, x)


def lasso_cd(X, y, lam, weights, beta, max_iter, tol):
    return _impl.lasso_cd(X, y, lam, weights, beta, max_iter, tol)
