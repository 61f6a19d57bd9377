"""Scaled clamped cubic B-spline basis on ``[-tau, tau]``.

The basis has ``K`` equal-width intervals and ``K + 3`` functions, each multiplied
by ``sqrt(K / (2 tau))`` so that the Gram matrix under a bounded density keeps its
eigenvalues away from zero as ``K`` grows.
"""
from dataclasses import dataclass, field

import numpy as np

from ._kernels import bspline_design
from .errors import InvalidArgumentError

DEGREE = 3


@dataclass(frozen=True)
class SplineBasis:
    tau: float
    K: int
    degree: int = DEGREE
    knots: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def scale(self):
        return float(np.sqrt(self.K / (2.0 * self.tau)))

    @property
    def dim(self):
        return self.K + self.degree

    @property
    def interior_knots(self):
        return self.knots[self.degree + 1 : -(self.degree + 1)]


def make_basis(tau, K):
    """Clamped cubic basis with ``K`` equispaced intervals on ``[-tau, tau]``."""
    if not np.isfinite(tau) or tau <= 0:
        raise InvalidArgumentError(f"tau must be positive and finite, got {tau!r}")
    if int(K) != K or K < 1:
        raise InvalidArgumentError(f"K must be a positive integer, got {K!r}")
    K = int(K)
    tau = float(tau)
    breaks = np.linspace(-tau, tau, K + 1)
    knots = np.concatenate([np.full(DEGREE, -tau), breaks, np.full(DEGREE, tau)])
    knots.setflags(write=False)
    return SplineBasis(tau=tau, K=K, degree=DEGREE, knots=knots)


def default_K(n):
    """``round(n ** 0.25)`` clipped to ``[4, 50]``."""
    return int(np.clip(round(max(n, 0) ** 0.25), 4, 50))


def design_matrix(basis, xs):
    """Rows of scaled basis values; zero rows for points outside the support."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    B, _ = bspline_design(basis.knots, basis.degree, xs)
    return basis.scale * B


def design_matrix_deriv(basis, xs):
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    _, dB = bspline_design(basis.knots, basis.degree, xs)
    return basis.scale * dB


def design_matrices(basis, xs):
    """Both the value and derivative matrices from one pass over ``xs``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    B, dB = bspline_design(basis.knots, basis.degree, xs)
    return basis.scale * B, basis.scale * dB


def eval_basis(basis, x):
    return design_matrix(basis, [x])[0]


def eval_basis_deriv(basis, x):
    return design_matrix_deriv(basis, [x])[0]


def _check(name, passed, value, threshold):
    return {"name": name, "passed": bool(passed), "value": float(value), "threshold": float(threshold)}


def _lsq_errors(tau, K, grid, f, fp):
    basis = make_basis(tau, K)
    B, dB = design_matrices(basis, grid)
    coef, *_ = np.linalg.lstsq(B, f, rcond=None)
    return np.max(np.abs(B @ coef - f)), np.max(np.abs(dB @ coef - fp))


def check_properties(tau, K, seed=0, n_points=1000, gram_draws=50_000, decay_Ks=(4, 8, 16, 32)):
    """Numerical checks of the basis at ``(tau, K)``; returns one record per property.

    Each record has ``name``, ``passed``, ``value`` and ``threshold``. The derivative-norm
    constant is estimated once at ``K = 4`` for this ``tau``; Gram eigenvalues use
    uniform draws on ``[-tau, tau]`` (density ``1/(2 tau)``); the decay check fits
    ``sin(3x/tau)`` by least squares for each ``K`` in ``decay_Ks``.
    """
    basis = make_basis(tau, K)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-tau, tau, n_points)
    B = design_matrix(basis, x) / basis.scale
    out = []

    pou = np.max(np.abs(B.sum(axis=1) - 1.0))
    out.append(_check("partition_of_unity", pou <= 1e-10, pou, 1e-10))
    nnz = int(np.max(np.count_nonzero(B, axis=1)))
    out.append(_check("local_support", nnz <= basis.degree + 1, nnz, basis.degree + 1))

    ends = design_matrix(basis, [-tau, tau]) / basis.scale
    target = np.zeros_like(ends)
    target[0, 0] = target[1, -1] = 1.0
    end_err = np.max(np.abs(ends - target))
    out.append(_check("clamped_endpoints", end_err <= 1e-12, end_err, 1e-12))

    h = 1e-6
    xi = rng.uniform(-tau + 2 * h, tau - 2 * h, 100)
    fd = (design_matrix(basis, xi + h) - design_matrix(basis, xi - h)) / (2 * h)
    fd_err = np.max(np.abs(fd - design_matrix_deriv(basis, xi)))
    out.append(_check("derivative_finite_difference", fd_err <= 1e-5, fd_err, 1e-5))

    grid = np.linspace(-tau, tau, 2001)

    def deriv_ratio(k):
        dB = design_matrix_deriv(make_basis(tau, k), grid)
        return np.max(np.linalg.norm(dB, axis=1)) / (k * np.sqrt(k))

    C = deriv_ratio(4)
    worst = max(deriv_ratio(k) for k in sorted(set(decay_Ks) | {K}))
    out.append(_check("derivative_norm_bound", worst <= 1.5 * C, worst / C, 1.5))

    f_dens = 1.0 / (2.0 * tau)
    u = rng.uniform(-tau, tau, gram_draws)
    lo, hi = np.inf, 0.0
    for k in sorted(set(decay_Ks) | {K}):
        N = design_matrix(make_basis(tau, k), u)
        ev = np.linalg.eigvalsh(N.T @ N / gram_draws)
        lo, hi = min(lo, ev[0] / f_dens), max(hi, ev[-1] / f_dens)
    out.append(_check("gram_min_eigenvalue", lo >= 0.005, lo, 0.005))
    out.append(_check("gram_max_eigenvalue", hi <= 1.05, hi, 1.05))

    dense = np.linspace(-tau, tau, 20001)
    f = np.sin(3.0 * dense / tau)
    fp = 3.0 / tau * np.cos(3.0 * dense / tau)
    errs = np.array([_lsq_errors(tau, k, dense, f, fp) for k in decay_Ks])
    ratios = errs[:-1] / errs[1:]
    # doubling K should cut the errors by at least 2^3 and 2^2
    out.append(_check("value_error_decay", np.all(ratios[:, 0] >= 8.0), ratios[:, 0].min(), 8.0))
    out.append(_check("derivative_error_decay", np.all(ratios[:, 1] >= 4.0), ratios[:, 1].min(), 4.0))
    return out
