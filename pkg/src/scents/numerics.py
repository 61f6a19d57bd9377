"""Least squares, projections and the LASSO solver shared by both pipelines."""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._kernels import lasso_cd
from .errors import InvalidArgumentError, LassoConvergenceError

RANK_RTOL = 1e-10


def _pivoted_qr(M):
    Q, R, piv = linalg.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return Q[:, :0], R[:0, :0], piv, 0
    rank = int(np.sum(diag > RANK_RTOL * diag[0]))
    return Q, R, piv, rank


def numerical_rank(M):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    return _pivoted_qr(M)[3]


def dependent_columns(M):
    """Indices of columns that pivoted QR places beyond the numerical rank."""
    M = np.asarray(M, dtype=float)
    if M.shape[1] == 0:
        return []
    if M.shape[0] == 0:
        return list(range(M.shape[1]))
    _, _, piv, rank = _pivoted_qr(M)
    return sorted(int(j) for j in piv[rank:])


def ols(X, y):
    """Least-squares coefficients of ``y`` on ``X`` (no intercept).

    Full-rank systems use a column-pivoted QR; rank-deficient ones fall back to
    the minimum-norm solution.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if p == 0:
        return np.zeros(0)
    if n == 0:
        return np.zeros(p)
    Q, R, piv, rank = _pivoted_qr(X)
    if rank == p:
        coef = np.empty(p)
        coef[piv] = linalg.solve_triangular(R, Q.T @ y)
        return coef
    coef, *_ = linalg.lstsq(X, y, cond=RANK_RTOL)
    return coef


def orthonormal_basis(M):
    """Orthonormal basis of the column space of ``M`` (numerical rank kept)."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.shape[1] == 0 or M.shape[0] == 0:
        return np.zeros((M.shape[0], 0))
    Q, _, _, rank = _pivoted_qr(M)
    return Q[:, :rank]


def project_out(A, M):
    """``A - M (M'M)^- M' A``: residual of each column of ``A`` after regressing on ``M``."""
    A = np.asarray(A, dtype=float)
    U = orthonormal_basis(M)
    if U.shape[1] == 0:
        return A.copy()
    return A - U @ (U.T @ A)


@dataclass(frozen=True)
class LassoConfig:
    """Settings for one LASSO solve. ``lam`` is the penalty level."""

    lam: float
    max_iters: int = 100_000
    tol: float = 1e-10
    standardize: bool = False

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise InvalidArgumentError(f"lambda must be nonnegative, got {self.lam!r}")
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be at least 1")
        if not self.tol > 0:
            raise InvalidArgumentError("tol must be positive")


@dataclass
class LassoResult:
    coef: np.ndarray
    n_iter: int
    converged: bool
    kkt: float
    objective_trace: np.ndarray


def _penalty(penalty_factor, p):
    if penalty_factor is None:
        return np.ones(p)
    w = np.asarray(penalty_factor, dtype=float)
    if w.shape != (p,) or np.any(w < 0):
        raise InvalidArgumentError("penalty_factor must be a nonnegative vector of length p")
    return w


def lasso_objective(X, y, theta, lam, penalty_factor=None):
    X = np.asarray(X, dtype=float)
    r = np.asarray(y, dtype=float) - X @ theta
    w = _penalty(penalty_factor, X.shape[1])
    return 0.5 * (r @ r) / X.shape[0] + lam * np.sum(w * np.abs(theta))


def kkt_residual(X, y, theta, lam, penalty_factor=None):
    """Largest violation of the LASSO subgradient conditions at ``theta``."""
    X = np.asarray(X, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n, p = X.shape
    if p == 0:
        return 0.0
    w = _penalty(penalty_factor, p)
    grad = X.T @ (np.asarray(y, dtype=float) - X @ theta) / n
    bound = lam * w
    active = theta != 0
    viol = np.where(
        active,
        np.abs(grad - bound * np.sign(theta)),
        np.maximum(np.abs(grad) - bound, 0.0),
    )
    return float(viol.max())


def lambda_max(X, y, penalty_factor=None):
    """Smallest penalty at which every penalized coefficient is zero."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    w = _penalty(penalty_factor, p)
    free = w == 0
    r = y
    if free.any():
        r = y - X[:, free] @ ols(X[:, free], y)
    grad = np.abs(X.T @ r) / n
    pen = ~free
    if not pen.any():
        return 0.0
    return float(np.max(grad[pen] / w[pen]))


def solve_lasso(X, y, cfg, penalty_factor=None, init=None):
    """Cyclic coordinate descent on ``(1/2n)||y - X theta||^2 + lam ||w * theta||_1``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    w = _penalty(penalty_factor, p)
    if p == 0 or n == 0:
        return LassoResult(np.zeros(p), 0, True, 0.0, np.zeros(1))
    scale = np.ones(p)
    Xs = X
    if cfg.standardize:
        scale = np.sqrt(np.mean(X * X, axis=0))
        scale[scale == 0] = 1.0
        Xs = X / scale
    beta = np.zeros(p) if init is None else np.array(init, dtype=float) * scale
    Xf = np.asfortranarray(Xs)
    n_iter, converged, trace = lasso_cd(Xf, y, float(cfg.lam), w, beta, int(cfg.max_iters), float(cfg.tol))
    kkt = kkt_residual(Xs, y, beta, cfg.lam, w)
    return LassoResult(beta / scale, n_iter, converged, kkt, trace)


def lasso(X, y, cfg, penalty_factor=None, init=None):
    """LASSO coefficients; raises :class:`LassoConvergenceError` if ``max_iters`` is hit."""
    res = solve_lasso(X, y, cfg, penalty_factor, init)
    if not res.converged:
        raise LassoConvergenceError(
            f"coordinate descent did not converge in {res.n_iter} sweeps (KKT residual {res.kkt:.3g})",
            coef=res.coef,
            kkt=res.kkt,
            n_iter=res.n_iter,
        )
    return res.coef


def lambda_grid(X, y, n_lambdas=50, min_ratio=None, penalty_factor=None):
    n, p = np.shape(X)
    lmax = lambda_max(X, y, penalty_factor)
    if lmax <= 0:
        return np.zeros(1)
    if min_ratio is None:
        min_ratio = 1e-3 if n > p else 1e-2
    return np.geomspace(lmax, lmax * min_ratio, n_lambdas)


def lasso_path(X, y, lambdas, penalty_factor=None, tol=1e-8, max_iters=100_000, strict=True):
    """Warm-started solutions along a decreasing sequence of penalties.

    With ``strict=False`` an unconverged solve keeps its last iterate instead of raising.
    """
    coefs = []
    init = None
    for lam in lambdas:
        cfg = LassoConfig(lam=float(lam), tol=tol, max_iters=max_iters)
        if strict:
            init = lasso(X, y, cfg, penalty_factor, init)
        else:
            init = solve_lasso(X, y, cfg, penalty_factor, init).coef
        coefs.append(init)
    return np.array(coefs)


def cv_lambda(X, y, n_folds=5, n_lambdas=50, penalty_factor=None, tol=1e-6, rule="min", max_iters=2000):
    """Penalty chosen by K-fold prediction error.

    Fold membership is ``row index mod n_folds``. ``rule="min"`` takes the minimizer
    (ties go to the larger penalty); ``rule="1se"`` takes the largest penalty whose
    error is within one standard error of the minimum. Fold fits only need to be
    accurate enough to rank penalties, so they are capped at ``max_iters`` sweeps.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    lambdas = lambda_grid(X, y, n_lambdas, penalty_factor=penalty_factor)
    if lambdas.size == 1:
        return float(lambdas[0])
    folds = np.arange(n) % n_folds
    fold_err = np.zeros((n_folds, lambdas.size))
    for k in range(n_folds):
        test = folds == k
        coefs = lasso_path(X[~test], y[~test], lambdas, penalty_factor, tol=tol, max_iters=max_iters, strict=False)
        resid = y[test][None, :] - coefs @ X[test].T
        fold_err[k] = np.mean(resid**2, axis=1)
    err = fold_err.mean(axis=0)
    best = int(np.argmin(err))
    if rule == "1se":
        se = fold_err[:, best].std(ddof=1) / np.sqrt(n_folds)
        best = int(np.flatnonzero(err <= err[best] + se)[0])
    elif rule != "min":
        raise InvalidArgumentError(f"unknown CV rule {rule!r}")
    return float(lambdas[best])


def theory_sigma(X, y, c=1.1, penalty_factor=None, n_iter=5, tol=1e-6):
    """Noise level for the rate-based penalty, refined by repeated LASSO fits.

    Starts from the standard deviation of ``y`` (after the unpenalized columns),
    then alternates ``lam = c sigma sqrt(log p / n)`` with
    ``sigma = ||resid|| / sqrt(n - df)``, ``df`` being the number of nonzero coefficients.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    w = _penalty(penalty_factor, p)
    free = w == 0
    r = y - X[:, free] @ ols(X[:, free], y) if free.any() else y - y.mean()
    sigma = float(np.sqrt(r @ r / max(n - int(free.sum()), 1)))
    rate = np.sqrt(np.log(max(p, 2)) / n)
    coef = None
    for _ in range(n_iter):
        cfg = LassoConfig(lam=c * sigma * rate, tol=tol, max_iters=10_000)
        coef = solve_lasso(X, y, cfg, w, coef).coef
        resid = y - X @ coef
        df = int(np.count_nonzero(coef))
        new = float(np.sqrt(resid @ resid / max(n - df, 1)))
        if abs(new - sigma) <= 1e-3 * sigma:
            sigma = new
            break
        sigma = new
    return sigma


def theory_lambda(X, y, c=1.1, penalty_factor=None):
    """``c * sigma_hat * sqrt(log p / n)`` with ``sigma_hat`` from :func:`theory_sigma`."""
    n, p = np.shape(X)
    sigma = theory_sigma(X, y, c, penalty_factor)
    return float(c * sigma * np.sqrt(np.log(max(p, 2)) / n))


def choose_lambda(X, y, mode="cv", penalty_factor=None):
    if mode == "cv":
        return cv_lambda(X, y, penalty_factor=penalty_factor)
    if mode == "cv1se":
        return cv_lambda(X, y, penalty_factor=penalty_factor, rule="1se")
    if mode == "theory":
        return theory_lambda(X, y, penalty_factor=penalty_factor)
    if isinstance(mode, (int, float)) and not isinstance(mode, bool):
        return float(mode)
    raise InvalidArgumentError(f"unknown lambda mode {mode!r}")
