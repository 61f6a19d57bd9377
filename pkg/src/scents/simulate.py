"""Synthetic data from the endogenous treatment model and Monte Carlo studies."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .errors import HarnessError, InvalidArgumentError, ScentsError
from .estimator import Dataset, FitConfig, fit, fit_wls, naive_ols

B_KINDS = ("zero", "linear", "sine", "quadratic_centered")


@dataclass(frozen=True)
class DgpConfig:
    """Data-generating process.

    ``Q = Z gamma0 + eta`` and ``Y = alpha0 1{Q >= 0} + X beta0 + b(eta) + eps`` with
    ``eta ~ N(0, 1)`` and ``eps = sigma_eps * s(eta) * N(0, 1)``, where ``s(eta) = 1 + eta^2``
    when ``heteroskedastic`` and 1 otherwise. ``b`` is ``a * h(eta)`` for the shape ``h``
    named by ``b_kind``; the amplitude ``a`` is ``b_coef`` when given, otherwise
    ``rho * sigma_eps / sqrt(1 - rho^2)``, which makes ``corr(nu, eta) = rho`` for the
    linear shape.
    """

    n: int = 900
    p1: int = 2
    p2: int = 2
    alpha0: float = 1.0
    beta0: tuple = None
    gamma0: tuple = None
    b_kind: str = "sine"
    b_coef: float = None
    rho: float = 0.5
    sigma_eps: float = 1.0
    heteroskedastic: bool = False
    overlap: bool = True
    sparsity: tuple = None
    seed: int = 0

    def __post_init__(self):
        if self.b_kind not in B_KINDS:
            raise InvalidArgumentError(f"b_kind must be one of {B_KINDS}, got {self.b_kind!r}")
        if not -1 < self.rho < 1:
            raise InvalidArgumentError("rho must lie in (-1, 1)")
        if self.sigma_eps <= 0 or self.n < 1 or self.p1 < 0 or self.p2 < 1:
            raise InvalidArgumentError("invalid dimensions or noise level")
        if self.beta0 is not None and len(self.beta0) != self.p1:
            raise InvalidArgumentError("beta0 must have length p1")
        if self.gamma0 is not None and len(self.gamma0) != self.p2:
            raise InvalidArgumentError("gamma0 must have length p2")

    @property
    def amplitude(self):
        if self.b_coef is not None:
            return float(self.b_coef)
        return self.rho * self.sigma_eps / math.sqrt(1.0 - self.rho**2)

    @property
    def beta(self):
        if self.beta0 is not None:
            return np.asarray(self.beta0, dtype=float)
        b = np.zeros(self.p1)
        b[: self.p1 if self.sparsity is None else self.sparsity[0]] = 1.0
        return b

    @property
    def gamma(self):
        if self.gamma0 is not None:
            return np.asarray(self.gamma0, dtype=float)
        g = np.zeros(self.p2)
        g[: self.p2 if self.sparsity is None else self.sparsity[1]] = 1.0
        return g

    def b(self, eta):
        a = self.amplitude
        if self.b_kind == "zero":
            return np.zeros_like(eta)
        if self.b_kind == "linear":
            return a * eta
        if self.b_kind == "sine":
            return a * np.sin(eta)
        return a * (eta**2 - 1.0)

    def b_prime(self, eta):
        a = self.amplitude
        if self.b_kind == "zero":
            return np.zeros_like(eta)
        if self.b_kind == "linear":
            return np.full_like(eta, a)
        if self.b_kind == "sine":
            return a * np.cos(eta)
        return 2.0 * a * eta


def reference_dgp(n=3600, seed=0, **overrides):
    """The reference low-dimensional design used throughout the tests and docs."""
    base = DgpConfig(
        n=n, p1=2, p2=2, alpha0=1.0, beta0=(1.0, -1.0), gamma0=(1.0, 0.5),
        b_kind="sine", rho=0.5, sigma_eps=1.0, overlap=True, seed=seed,
    )
    return replace(base, **overrides)


def reference_hd_dgp(n=300, seed=0, **overrides):
    base = DgpConfig(
        n=n, p1=500, p2=500, alpha0=1.0, b_kind="sine", rho=0.5,
        sigma_eps=1.0, overlap=False, sparsity=(3, 3), seed=seed,
    )
    return replace(base, **overrides)


def draw(cfg):
    """Generate a sample and return it with the latent ``eta`` and ``nu``."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    if cfg.overlap:
        shared = min(cfg.p1, cfg.p2)
        C = rng.standard_normal((n, cfg.p1 + cfg.p2 - shared))
        X = C[:, : cfg.p1]
        Z = np.column_stack([C[:, :shared], C[:, cfg.p1 :]])
    else:
        X = rng.standard_normal((n, cfg.p1))
        Z = rng.standard_normal((n, cfg.p2))
    eta = rng.standard_normal(n)
    white = rng.standard_normal(n)
    scale = 1.0 + eta**2 if cfg.heteroskedastic else 1.0
    nu = cfg.b(eta) + cfg.sigma_eps * scale * white
    q = Z @ cfg.gamma + eta
    y = cfg.alpha0 * (q >= 0) + X @ cfg.beta + nu
    return Dataset(y, q, X, Z), eta, nu


def generate(cfg):
    return draw(cfg)[0]


def replicate_seed(seed, r):
    """Independent 63-bit seed for replicate ``r`` of a study rooted at ``seed``."""
    return int(np.random.SeedSequence([seed, r]).generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass
class MonteCarloSummary:
    alpha0: float
    R: int
    n_failed: int
    bias: float
    sd: float
    rmse: float
    ks_stat: float
    naive_bias: float
    estimates: np.ndarray = field(repr=False)
    naive_estimates: np.ndarray = field(repr=False)
    z_scores: np.ndarray = field(default=None, repr=False)
    ks_stat_plugin: float = None

    def as_dict(self):
        out = {
            "R": self.R,
            "n_failed": self.n_failed,
            "alpha0": self.alpha0,
            "bias": self.bias,
            "sd": self.sd,
            "rmse": self.rmse,
            "ks_stat": self.ks_stat,
            "naive_bias": self.naive_bias,
        }
        if self.ks_stat_plugin is not None:
            out["ks_stat_plugin"] = self.ks_stat_plugin
        return out


def _mean(xs):
    return math.fsum(xs) / len(xs)


def _one(dgp, cfg, r, method, lasso_mode):
    data = generate(replace(dgp, seed=replicate_seed(dgp.seed, r)))
    fit_cfg = replace(cfg, seed=replicate_seed(cfg.seed, r)) if cfg is not None else None
    naive = naive_ols(data)
    if method == "highdim":
        from .highdim import HighDimConfig, fit_hd

        hd_cfg = fit_cfg or HighDimConfig(seed=replicate_seed(0, r), lambda_mode=lasso_mode)
        res = fit_hd(data, hd_cfg)
        z = (res.sigma2_hat**2 / res.sigma1_hat) * math.sqrt(res.n3) * (res.alpha_hat - dgp.alpha0)
        return res.alpha_hat, naive, z
    fit_cfg = fit_cfg or FitConfig(seed=replicate_seed(0, r))
    est = fit_wls(data, fit_cfg) if method == "wls" else fit(data, fit_cfg)
    return est.alpha_bar, naive, None


def monte_carlo(dgp, cfg=None, R=200, method="fixed", threads=1, lasso_mode="theory"):
    """Repeat (generate, fit) ``R`` times and summarize the estimator's sampling law.

    Replicate ``r`` draws data with seed ``replicate_seed(dgp.seed, r)``, so two studies
    sharing ``dgp.seed`` see identical samples. Failed replicates are dropped; more
    than 10% failures raise :class:`HarnessError`.
    """
    if R < 20:
        raise InvalidArgumentError("R must be at least 20")
    if method not in ("fixed", "wls", "highdim"):
        raise InvalidArgumentError(f"unknown method {method!r}")

    def task(r):
        try:
            return _one(dgp, cfg, r, method, lasso_mode)
        except ScentsError:
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, range(R)))
    else:
        results = [task(r) for r in range(R)]
    ok = [res for res in results if res is not None]
    n_failed = R - len(ok)
    if n_failed > 0.1 * R:
        raise HarnessError(f"{n_failed} of {R} replicates failed")
    est = np.array([o[0] for o in ok])
    naive = np.array([o[1] for o in ok])
    dev = est - dgp.alpha0
    bias = _mean(dev)
    mean = _mean(est)
    sd = math.sqrt(math.fsum((est - mean) ** 2) / (len(est) - 1))
    rmse = math.sqrt(_mean(dev**2))
    ks = float(stats.kstest(dev / sd, "norm").statistic) if sd > 0 else 1.0
    z = None
    ks_plugin = None
    if method == "highdim":
        z = np.array([o[2] for o in ok])
        ks_plugin = float(stats.kstest(z, "norm").statistic)
    return MonteCarloSummary(
        alpha0=dgp.alpha0,
        R=R,
        n_failed=n_failed,
        bias=bias,
        sd=sd,
        rmse=rmse,
        ks_stat=ks,
        naive_bias=_mean(naive - dgp.alpha0),
        estimates=est,
        naive_estimates=naive,
        z_scores=z,
        ks_stat_plugin=ks_plugin,
    )
