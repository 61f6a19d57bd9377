"""Treatment-effect estimation when the treatment is set by the sign of an endogenous score.

The fixed-dimension estimator lives in :mod:`scents.estimator`, the high-dimensional
one in :mod:`scents.highdim`, bootstrap intervals in :mod:`scents.inference` and
simulation tools in :mod:`scents.simulate`.
"""
__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (
    BootstrapFailureError,
    DataFormatError,
    DegenerateVarianceError,
    EmptySupportError,
    HarnessError,
    IdentificationWarning,
    InsufficientDataError,
    InvalidArgumentError,
    LassoConvergenceError,
    ScentsError,
    SingularDesignError,
)
from .estimator import Dataset, FitConfig, FixedFit, fit, fit_wls, naive_ols
from .highdim import HighDimConfig, HighDimFit, fit_hd
from .inference import BootstrapResult, bootstrap_ci, coverage_check
from .simulate import DgpConfig, generate, monte_carlo, reference_dgp, reference_hd_dgp
from .spline import SplineBasis, make_basis

__all__ = [
    "BACKEND",
    "BootstrapFailureError",
    "BootstrapResult",
    "DataFormatError",
    "Dataset",
    "DegenerateVarianceError",
    "DgpConfig",
    "EmptySupportError",
    "FitConfig",
    "FixedFit",
    "HarnessError",
    "HighDimConfig",
    "HighDimFit",
    "IdentificationWarning",
    "InsufficientDataError",
    "InvalidArgumentError",
    "LassoConvergenceError",
    "ScentsError",
    "SingularDesignError",
    "SplineBasis",
    "bootstrap_ci",
    "coverage_check",
    "fit",
    "fit_hd",
    "fit_wls",
    "generate",
    "make_basis",
    "monte_carlo",
    "naive_ols",
    "reference_dgp",
    "reference_hd_dgp",
]
