"""High-dimensional estimator: LASSO first stage, LASSO-assisted spline estimate of
``b'``, and a debiased ratio estimate of the treatment effect with plug-in variance.

A single split assignment is used (no rotation averaging).
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import spline
from .errors import DegenerateVarianceError, InsufficientDataError, InvalidArgumentError
from .estimator import FitConfig, residualize, resolve_tau, split_three
from .numerics import LassoConfig, choose_lambda, lasso, ols, project_out

VARIANCE_FLOOR = 1e-8
K_EXPONENT = 1.0 / 7.0  # 1 / (2 * smoothness + 1) with smoothness 3


@dataclass(frozen=True)
class HighDimConfig:
    tau: object = "auto"
    K: object = "auto"
    seed: int = 0
    split: str = "shuffle"
    lambda_mode: object = "theory"
    level: float = 0.95
    refit_gamma: bool = True

    def __post_init__(self):
        FitConfig(tau=self.tau, K=self.K, seed=self.seed, split=self.split)
        if not 0 < self.level < 1:
            raise InvalidArgumentError("level must lie in (0, 1)")


@dataclass
class HighDimFit:
    alpha_hat: float
    gamma_hat: np.ndarray
    omega_b_hat: np.ndarray
    theta_S: np.ndarray
    theta_Y: np.ndarray
    sigma1_hat: float
    sigma2_hat: float
    ci95: tuple
    n3: int
    lambdas: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def se(self):
        return self.sigma1_hat / (self.sigma2_hat**2 * math.sqrt(self.n3))


def _centered(A):
    return A - A.mean(axis=0) if A.shape[0] else A


def _standardized(A):
    scale = np.sqrt(np.mean(A * A, axis=0)) if A.shape[0] else np.ones(A.shape[1])
    scale[scale == 0] = 1.0
    return A / scale, scale


def _lasso_fit(X, y, mode, penalty_factor=None):
    lam = choose_lambda(X, y, mode, penalty_factor)
    return lasso(X, y, LassoConfig(lam=lam, tol=1e-8), penalty_factor), lam


def rate_K(n, s_beta, s_gamma, p):
    """``(n / (s_beta^2 s_gamma log p))^(1/7)`` rounded and clipped to ``[4, 50]``."""
    s_beta = max(int(s_beta), 1)
    s_gamma = max(int(s_gamma), 1)
    denom = s_beta**2 * s_gamma * math.log(max(p, 3))
    return int(np.clip(round((n / denom) ** K_EXPONENT), 4, 50))


def estimate_gamma_hd(d1, cfg="theory", refit=False):
    """LASSO of ``q`` on centered ``Z``.

    ``cfg`` is a :class:`LassoConfig` (fixed penalty) or a penalty-selection mode
    (``"cv"``, ``"cv1se"``, ``"theory"`` or a number). With ``refit`` the selected
    coefficients are re-estimated by OLS, removing the shrinkage that would
    otherwise leak part of ``Z gamma0`` into ``eta_hat``. Returns ``(gamma_hat, lam)``.
    """
    Zc = _centered(d1.Z)
    if isinstance(cfg, LassoConfig):
        gamma, lam = lasso(Zc, d1.q, cfg), cfg.lam
    else:
        gamma, lam = _lasso_fit(Zc, d1.q, cfg)
    support = np.flatnonzero(gamma)
    if refit and 0 < support.size < d1.n - 1:
        gamma = np.zeros_like(gamma)
        gamma[support] = ols(Zc[:, support], d1.q - d1.q.mean())
    return gamma, lam


def estimate_bprime_hd(d2, gamma_hat, basis, cfg="theory", y=None):
    """Spline coefficients for ``b'`` with the linear part fitted by LASSO.

    ``(S, X)`` and ``y`` have the spline columns projected out; the coefficient on
    ``S`` is left unpenalized. The spline is then fitted to ``y - (S, X) beta_hat``.
    Returns ``(omega_b_hat, lam, n_active)`` where ``n_active`` counts nonzero ``X`` coefficients.
    """
    y = d2.y if y is None else y
    eta_hat, mask = residualize(d2, gamma_hat, basis.tau)
    m = int(mask.sum())
    if m <= basis.dim:
        raise InsufficientDataError(f"{m} truncated observations cannot fit {basis.dim} spline coefficients")
    N = spline.design_matrix(basis, eta_hat[mask])
    V = np.column_stack([d2.S[mask], _centered(d2.X[mask])])
    ym = y[mask]
    Vp, scale = _standardized(project_out(V, N))
    yp = project_out(ym, N)
    penalty = np.ones(V.shape[1])
    penalty[0] = 0.0
    if isinstance(cfg, LassoConfig):
        coef_s, lam = lasso(Vp, yp, cfg, penalty), cfg.lam
    else:
        coef_s, lam = _lasso_fit(Vp, yp, cfg, penalty)
    coef = coef_s / scale
    omega = ols(N, ym - V @ coef)
    return omega, lam, int(np.count_nonzero(coef[1:]))


def fit_hd(data, cfg=None):
    """Debiased treatment-effect estimate for many covariates.

    Part 1 gives ``gamma_hat``, part 2 the spline for ``b'``, part 3 the estimate:
    after projecting the spline in ``eta_hat`` out of ``Y``, ``S`` and
    ``W = (X, b'(eta_hat) Z)``, ``Y`` and ``S`` are each LASSO-regressed on ``W`` and
    the effect is the ratio of the residual cross-product to the ``S``-residual sum
    of squares.
    """
    cfg = cfg or HighDimConfig()
    split_cfg = FitConfig(seed=cfg.seed, split=cfg.split)
    d1, d2, d3 = split_three(data, split_cfg)
    mode = cfg.lambda_mode

    # work with a unit-scale response so every penalty choice is scale free
    y_scale = float(np.std(data.y)) or 1.0
    y2 = d2.y / y_scale
    y3 = d3.y / y_scale

    gamma_hat, lam_gamma = estimate_gamma_hd(d1, mode, cfg.refit_gamma)
    s_gamma = int(np.count_nonzero(gamma_hat))

    eta2 = d2.q - d2.Z @ gamma_hat
    tau = resolve_tau(eta2, cfg.tau)
    n2 = int(np.sum(np.abs(eta2) <= tau))
    if cfg.K == "auto":
        basis = spline.make_basis(tau, 4)
        omega, lam_b, s_beta = estimate_bprime_hd(d2, gamma_hat, basis, mode, y2)
        K = rate_K(n2, s_beta, s_gamma, data.p1 + data.p2)
        if K != basis.K:
            basis = spline.make_basis(tau, K)
            omega, lam_b, s_beta = estimate_bprime_hd(d2, gamma_hat, basis, mode, y2)
    else:
        basis = spline.make_basis(tau, int(cfg.K))
        omega, lam_b, s_beta = estimate_bprime_hd(d2, gamma_hat, basis, mode, y2)

    eta3, mask = residualize(d3, gamma_hat, tau)
    n3 = int(mask.sum())
    N3, dN3 = spline.design_matrices(basis, eta3[mask])
    bprime = dN3 @ omega
    W = np.column_stack([_centered(d3.X[mask]), bprime[:, None] * _centered(d3.Z[mask])])
    Yp = project_out(y3[mask], N3)
    Sp = project_out(d3.S[mask], N3)
    Wp, w_scale = _standardized(project_out(W, N3))

    theta_Y, lam0 = _lasso_fit(Wp, Yp, mode)
    theta_S, lam1 = _lasso_fit(Wp, Sp, mode)
    r_Y = Yp - Wp @ theta_Y
    r_S = Sp - Wp @ theta_S

    sigma2_sq = float(r_S @ r_S) / n3
    if not sigma2_sq > VARIANCE_FLOOR**2:
        raise DegenerateVarianceError(
            f"treatment residual variance {sigma2_sq:.3g} is degenerate; S is explained by the covariates"
        )
    alpha_s = float(r_Y @ r_S) / (n3 * sigma2_sq)
    eps = r_Y - alpha_s * r_S
    sigma1_sq = float(np.mean(eps**2 * r_S**2))

    alpha_hat = alpha_s * y_scale
    sigma1 = math.sqrt(sigma1_sq) * y_scale
    sigma2 = math.sqrt(sigma2_sq)
    half = stats.norm.ppf(0.5 + cfg.level / 2) * sigma1 / (sigma2**2 * math.sqrt(n3))
    return HighDimFit(
        alpha_hat=alpha_hat,
        gamma_hat=gamma_hat,
        omega_b_hat=omega * y_scale,
        theta_S=theta_S / w_scale,
        theta_Y=theta_Y / w_scale * y_scale,
        sigma1_hat=sigma1,
        sigma2_hat=sigma2,
        ci95=(alpha_hat - half, alpha_hat + half),
        n3=n3,
        lambdas={"lambda": lam_gamma, "lambda_b": lam_b, "lambda0": lam0, "lambda1": lam1},
        diagnostics={
            "tau": tau,
            "K": basis.K,
            "masked_fraction": n3 / d3.n,
            "active_gamma": s_gamma,
            "active_beta": s_beta,
            "active_theta_Y": int(np.count_nonzero(theta_Y)),
            "active_theta_S": int(np.count_nonzero(theta_S)),
            "y_scale": y_scale,
        },
    )
