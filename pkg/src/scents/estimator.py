"""Fixed-dimension estimator: three-way split, first-stage OLS, spline estimate of
``b'``, stacked projected least squares for the treatment effect, rotation averaging.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import spline
from .errors import (
    EmptySupportError,
    IdentificationWarning,
    InsufficientDataError,
    InvalidArgumentError,
    SingularDesignError,
)
from .numerics import dependent_columns, numerical_rank, ols, orthonormal_basis, project_out

MAX_CONDITION = 1e12
TAU_QUANTILE = 0.9
WEIGHT_FLOOR = 1e-3


@dataclass(frozen=True)
class Dataset:
    """Observed sample: response ``y``, score ``q``, outcome covariates ``X``, score covariates ``Z``."""

    y: np.ndarray
    q: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    x_names: tuple = None
    z_names: tuple = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        q = np.asarray(self.q, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        Z = np.asarray(self.Z, dtype=float)
        n = y.shape[0]
        if X.ndim == 1:
            X = X.reshape(n, -1) if X.size else np.zeros((n, 0))
        if Z.ndim == 1:
            Z = Z.reshape(n, -1) if Z.size else np.zeros((n, 0))
        if q.shape[0] != n or X.shape[0] != n or Z.shape[0] != n:
            raise InvalidArgumentError(
                f"row counts differ: y={n}, q={q.shape[0]}, X={X.shape[0]}, Z={Z.shape[0]}"
            )
        for name, arr in (("y", y), ("q", q), ("X", X), ("Z", Z)):
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"{name} contains non-finite values")
        x_names = tuple(self.x_names) if self.x_names is not None else tuple(f"x_{j + 1}" for j in range(X.shape[1]))
        z_names = tuple(self.z_names) if self.z_names is not None else tuple(f"z_{j + 1}" for j in range(Z.shape[1]))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "x_names", x_names)
        object.__setattr__(self, "z_names", z_names)

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def p1(self):
        return self.X.shape[1]

    @property
    def p2(self):
        return self.Z.shape[1]

    @property
    def S(self):
        """Treatment indicator ``1{q >= 0}``."""
        return (self.q >= 0).astype(float)

    def take(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.y[idx], self.q[idx], self.X[idx], self.Z[idx], self.x_names, self.z_names)


@dataclass(frozen=True)
class FitConfig:
    tau: object = "auto"
    K: object = "auto"
    seed: int = 0
    wls: bool = False
    split: str = "shuffle"

    def __post_init__(self):
        if self.tau != "auto" and not (np.isfinite(self.tau) and self.tau > 0):
            raise InvalidArgumentError(f"tau must be 'auto' or a positive number, got {self.tau!r}")
        if self.K != "auto" and (int(self.K) != self.K or self.K < 4):
            raise InvalidArgumentError(f"K must be 'auto' or an integer >= 4, got {self.K!r}")
        if self.split not in ("shuffle", "round_robin"):
            raise InvalidArgumentError(f"unknown split scheme {self.split!r}")


@dataclass
class Rotation:
    """Result of one assignment of the three parts to (gamma, b', alpha)."""

    alpha: float
    theta: np.ndarray
    gamma_hat: np.ndarray
    omega_hat: np.ndarray
    basis: spline.SplineBasis
    gram: np.ndarray
    condition: float
    n_used: int
    n_part: int
    t_ratios: np.ndarray


@dataclass
class FixedFit:
    alpha_bar: float
    alpha_per_rotation: np.ndarray
    theta: np.ndarray
    gamma_hat: np.ndarray
    omega_tau_hat: np.ndarray
    n_used: int
    identification_warning: bool = False
    diagnostics: dict = field(default_factory=dict)


def split_indices(n, cfg):
    if n < 9:
        raise InsufficientDataError(f"need at least 9 observations to split in three, got {n}")
    if cfg.split == "round_robin":
        order = np.arange(n)
        return [order[k::3] for k in range(3)]
    perm = np.random.default_rng(cfg.seed).permutation(n)
    return np.array_split(perm, 3)


def split_three(data, cfg):
    """Disjoint parts with sizes differing by at most one; extra rows go to the earliest parts."""
    return tuple(data.take(idx) for idx in split_indices(data.n, cfg))


def _centered(A):
    if A.shape[0] == 0:
        return A
    return A - A.mean(axis=0)


def estimate_gamma(d1):
    """OLS slopes of ``q`` on ``Z`` (columns centered, so an intercept is implied)."""
    Zc = _centered(d1.Z)
    if numerical_rank(Zc) < d1.p2:
        bad = [d1.z_names[j] for j in dependent_columns(Zc)]
        raise SingularDesignError(f"Z is rank deficient in the first-stage part; dependent columns: {bad}", columns=bad)
    return ols(Zc, d1.q)


def gamma_t_ratios(d1, gamma_hat):
    Zc = _centered(d1.Z)
    resid = d1.q - d1.q.mean() - Zc @ gamma_hat
    dof = max(d1.n - d1.p2 - 1, 1)
    sigma2 = resid @ resid / dof
    cov = sigma2 * np.linalg.pinv(Zc.T @ Zc)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, np.abs(gamma_hat) / se, np.inf)
    return t


def resolve_tau(eta_hat, tau):
    if tau == "auto":
        return float(np.quantile(np.abs(eta_hat), TAU_QUANTILE))
    return float(tau)


def residualize(d, gamma_hat, tau="auto"):
    """First-stage residuals ``q - Z gamma_hat`` and the ``|eta_hat| <= tau`` mask."""
    eta_hat = d.q - d.Z @ np.asarray(gamma_hat, dtype=float)
    tau = resolve_tau(eta_hat, tau)
    mask = np.abs(eta_hat) <= tau
    if not mask.any():
        raise EmptySupportError(f"no observation with |eta_hat| <= {tau:g}")
    return eta_hat, mask


def estimate_bprime(d2, gamma_hat, basis):
    """Spline coefficients ``omega`` with ``b'(x) ~ eval_basis_deriv(basis, x) @ omega``.

    Regresses ``y`` on ``(S, X)`` after projecting the spline columns out, then
    fits the spline to what remains.
    """
    eta_hat, mask = residualize(d2, gamma_hat, basis.tau)
    m = int(mask.sum())
    if m <= 1 + d2.p1 + basis.dim:
        raise InsufficientDataError(
            f"{m} truncated observations cannot identify {1 + d2.p1 + basis.dim} coefficients"
        )
    N = spline.design_matrix(basis, eta_hat[mask])
    V = np.column_stack([d2.S[mask], d2.X[mask]])
    y = d2.y[mask]
    beta = ols(project_out(V, N), y)
    return ols(N, y - V @ beta)


def assemble_system(d3, gamma_hat, omega_hat, basis, center=False):
    """Stack the outcome equation (truncated rows) over the first-stage equation (all rows).

    Returns ``(W, N_a, resp)``. With ``center=True`` the regressor blocks use
    part-centered ``X`` and ``Z``; the treatment indicator and ``eta_hat`` always use raw values.
    """
    eta_hat, mask = residualize(d3, gamma_hat, basis.tau)
    X, Z = (_centered(d3.X), _centered(d3.Z)) if center else (d3.X, d3.Z)
    Nm, dNm = spline.design_matrices(basis, eta_hat[mask])
    bprime = dNm @ omega_hat
    W1 = np.column_stack([d3.S[mask], X[mask], bprime[:, None] * Z[mask]])
    W2 = np.column_stack([np.zeros((d3.n, 1 + d3.p1)), -Z])
    W = np.vstack([W1, W2])
    N_a = np.vstack([Nm, np.zeros((d3.n, basis.dim))])
    resp = np.concatenate([d3.y[mask], eta_hat])
    return W, N_a, resp


def _solve_stacked(W, N_a, resp, weights=None):
    W = np.asarray(W, dtype=float)
    N_a = np.asarray(N_a, dtype=float)
    resp = np.asarray(resp, dtype=float)
    if weights is not None:
        s = 1.0 / np.sqrt(np.asarray(weights, dtype=float))
        W, N_a, resp = W * s[:, None], N_a * s[:, None], resp * s
    U = orthonormal_basis(N_a)
    Wp = W - U @ (U.T @ W)
    rp = resp - U @ (U.T @ resp)
    G = Wp.T @ Wp
    G = 0.5 * (G + G.T)
    cond = float(np.linalg.cond(G)) if G.size else 0.0
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularDesignError(
            f"stacked system is singular (condition number {cond:.3g} exceeds {MAX_CONDITION:.0e})",
            columns=dependent_columns(Wp),
            condition=cond,
        )
    theta = np.linalg.solve(G, Wp.T @ rp)
    return theta, G, cond


def solve_alpha(W, N_a, resp, weights=None):
    """``theta = (W' P W)^{-1} W' P resp`` with ``P`` the projection off ``N_a``; returns ``(theta, alpha)``.

    ``weights`` are per-row variances; rows are scaled by ``1/sqrt(weight)`` first.
    """
    theta, _, _ = _solve_stacked(W, N_a, resp, weights)
    return theta, float(theta[0])


def _wls_weights(W, N_a, resp, n3):
    theta, _, _ = _solve_stacked(W, N_a, resp)
    Nm = N_a[:n3]
    upper = resp[:n3] - W[:n3] @ theta
    resid = upper - Nm @ ols(Nm, upper)
    var_fit = Nm @ ols(Nm, resid**2)
    floor = WEIGHT_FLOOR * np.median(var_fit[var_fit > 0]) if np.any(var_fit > 0) else WEIGHT_FLOOR
    var_fit = np.maximum(var_fit, floor)
    eta_var = np.var(resp[n3:], ddof=1) if resp.size - n3 > 1 else 1.0
    return np.concatenate([var_fit, np.full(resp.size - n3, max(eta_var, floor))])


def rotation(d_gamma, d_b, d_alpha, cfg):
    """One pass: ``gamma`` from ``d_gamma``, ``b'`` from ``d_b``, the treatment effect from ``d_alpha``."""
    gamma_hat = estimate_gamma(d_gamma)
    t_ratios = gamma_t_ratios(d_gamma, gamma_hat)
    eta_b = d_b.q - d_b.Z @ gamma_hat
    tau = resolve_tau(eta_b, cfg.tau)
    n_b = int(np.sum(np.abs(eta_b) <= tau))
    if n_b == 0:
        raise EmptySupportError(f"no observation with |eta_hat| <= {tau:g} in the b' part")
    K = spline.default_K(n_b) if cfg.K == "auto" else int(cfg.K)
    basis = spline.make_basis(tau, K)
    omega = estimate_bprime(d_b, gamma_hat, basis)
    W, N_a, resp = assemble_system(d_alpha, gamma_hat, omega, basis, center=True)
    n3 = W.shape[0] - d_alpha.n
    weights = _wls_weights(W, N_a, resp, n3) if cfg.wls else None
    theta, G, cond = _solve_stacked(W, N_a, resp, weights)
    return Rotation(
        alpha=float(theta[0]),
        theta=theta,
        gamma_hat=gamma_hat,
        omega_hat=omega,
        basis=basis,
        gram=G,
        condition=cond,
        n_used=n3,
        n_part=d_alpha.n,
        t_ratios=t_ratios,
    )


def fit_parts(parts, cfg):
    """Run the three cyclic rotations over already-split parts and average.

    ``alpha_per_rotation[k]`` is the estimate computed on ``parts[k]``; the rotation
    with the effect estimated on ``parts[2]`` supplies ``theta`` and ``omega_tau_hat``.
    """
    rots = []
    for k in range(3):
        rots.append(rotation(parts[(k + 1) % 3], parts[(k + 2) % 3], parts[k], cfg))
    alphas = np.array([r.alpha for r in rots])
    last = rots[2]
    n = sum(p.n for p in parts)
    flagged = any(bool(np.all(r.t_ratios < 1.0)) for r in rots)
    if flagged:
        warnings.warn(
            "first-stage coefficients on Z are all within one standard error of zero; "
            "the treatment effect is weakly identified",
            IdentificationWarning,
            stacklevel=3,
        )
    return FixedFit(
        alpha_bar=float(np.mean(alphas)),
        alpha_per_rotation=alphas,
        theta=last.theta,
        gamma_hat=last.gamma_hat,
        omega_tau_hat=3.0 * last.gram / n,
        n_used=last.n_used,
        identification_warning=flagged,
        diagnostics={
            "tau": [r.basis.tau for r in rots],
            "K": [r.basis.K for r in rots],
            "masked_fraction": [r.n_used / r.n_part for r in rots],
            "condition_number": [r.condition for r in rots],
            "gamma_t_ratios": [r.t_ratios.tolist() for r in rots],
        },
    )


def fit(data, cfg=None):
    cfg = cfg or FitConfig()
    return fit_parts(split_three(data, cfg), cfg)


def fit_wls(data, cfg=None):
    """:func:`fit` with variance weights estimated from a preliminary unweighted pass."""
    cfg = cfg or FitConfig()
    return fit(data, FitConfig(tau=cfg.tau, K=cfg.K, seed=cfg.seed, wls=True, split=cfg.split))


def naive_ols(data):
    """Coefficient on ``S`` from OLS of ``y`` on ``(1, S, X)``, ignoring endogeneity."""
    V = np.column_stack([np.ones(data.n), data.S, data.X])
    return float(ols(V, data.y)[1])
