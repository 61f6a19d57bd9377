"""Pairs-bootstrap confidence intervals for the fixed-dimension estimator."""
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BootstrapFailureError, IdentificationWarning, InvalidArgumentError, ScentsError, SingularDesignError
from .estimator import FitConfig, fit
from .simulate import generate, replicate_seed

MAX_FAILURE_RATE = 0.05

TABLE_FIELDS = ("Point Estimate", "Bootstrap mean.", "Bootstrap s.e.", "Bootstrap 95% C.I.")


@dataclass
class BootstrapResult:
    point: float
    boot_mean: float
    boot_se: float
    ci: tuple
    B: int
    level: float
    n_failed: int = 0
    replicates: np.ndarray = field(default=None, repr=False)

    def interval(self, level):
        """Percentile interval at another ``level`` from the same replicates."""
        return _percentile_ci(self.replicates, level)

    def table(self):
        """Summary in the layout of a results table; the CI label carries the level."""
        label = TABLE_FIELDS[3] if self.level == 0.95 else f"Bootstrap {100 * self.level:g}% C.I."
        return {
            TABLE_FIELDS[0]: self.point,
            TABLE_FIELDS[1]: self.boot_mean,
            TABLE_FIELDS[2]: self.boot_se,
            label: [self.ci[0], self.ci[1]],
        }


def _percentile_ci(reps, level):
    lo, hi = np.quantile(reps, [(1.0 - level) / 2.0, (1.0 + level) / 2.0])
    return float(lo), float(hi)


def resample_indices(n, seed, b, attempt=0):
    """Row indices of bootstrap replicate ``b``: ``n`` draws with replacement."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, b, attempt]))
    return rng.integers(0, n, n)


def _replicate(data, cfg, seed, b, resplit):
    for attempt in range(2):
        idx = resample_indices(data.n, seed, b, attempt)
        sub = replace(cfg, seed=replicate_seed(seed, 2 * b + attempt)) if resplit else cfg
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IdentificationWarning)
                return fit(data.take(idx), sub).alpha_bar
        except SingularDesignError:
            continue
        except ScentsError:
            return None
    return None


def bootstrap_ci(data, cfg=None, B=500, level=0.95, seed=0, threads=1, resplit=True):
    """Percentile interval for the averaged treatment effect from ``B`` row resamples.

    Each replicate refits on ``n`` rows drawn with replacement; with ``resplit`` the
    three-way split is re-randomized per replicate from ``(seed, b)``. A replicate
    hitting a singular design is retried once with a fresh resample. More than 5%
    failed replicates raise :class:`BootstrapFailureError`. Results do not depend on
    ``threads``.
    """
    if B < 50:
        raise InvalidArgumentError(f"B must be at least 50, got {B}")
    if not 0.5 < level < 1:
        raise InvalidArgumentError(f"level must lie in (0.5, 1), got {level}")
    cfg = cfg or FitConfig(seed=seed)
    point = fit(data, cfg).alpha_bar

    def task(b):
        return _replicate(data, cfg, seed, b, resplit)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(task, range(B)))
    else:
        out = [task(b) for b in range(B)]
    reps = np.array([a for a in out if a is not None])
    n_failed = B - reps.size
    if n_failed > MAX_FAILURE_RATE * B:
        raise BootstrapFailureError(f"{n_failed} of {B} bootstrap replicates failed")
    mean = math.fsum(reps) / reps.size
    se = math.sqrt(math.fsum((reps - mean) ** 2) / (reps.size - 1))
    return BootstrapResult(
        point=point,
        boot_mean=mean,
        boot_se=se,
        ci=_percentile_ci(reps, level),
        B=B,
        level=level,
        n_failed=n_failed,
        replicates=reps,
    )


def coverage_check(dgp, cfg=None, R=100, B=200, level=0.95, seed=0, threads=1):
    """Fraction of ``R`` simulated datasets whose bootstrap interval covers ``dgp.alpha0``.

    Dataset ``r`` uses seed ``replicate_seed(dgp.seed, r)`` and bootstrap seed
    ``replicate_seed(seed, r)``. A dataset whose bootstrap fails counts as not covered.
    """
    if R < 50:
        raise InvalidArgumentError(f"R must be at least 50, got {R}")
    hits = 0
    for r in range(R):
        data = generate(replace(dgp, seed=replicate_seed(dgp.seed, r)))
        boot_seed = replicate_seed(seed, r)
        fit_cfg = replace(cfg, seed=boot_seed) if cfg is not None else FitConfig(seed=boot_seed)
        try:
            res = bootstrap_ci(data, fit_cfg, B=B, level=level, seed=boot_seed, threads=threads)
        except ScentsError:
            continue
        hits += res.ci[0] <= dgp.alpha0 <= res.ci[1]
    return hits / R
