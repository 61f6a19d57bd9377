"""Exception and warning types raised by the estimators."""


class ScentsError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ScentsError, ValueError):
    pass


class InsufficientDataError(ScentsError):
    pass


class EmptySupportError(ScentsError):
    """No observation survived the ``|eta_hat| <= tau`` truncation."""


class SingularDesignError(ScentsError):
    """A least-squares system was (numerically) singular.

    Parameters
    ----------
    message : str
    columns : list, optional
        Names or indices of the columns found to be linearly dependent.
    condition : float, optional
        Condition number of the offending Gram matrix, when computed.
    """

    def __init__(self, message, columns=None, condition=None):
        super().__init__(message)
        self.columns = list(columns) if columns is not None else []
        self.condition = condition


class DegenerateVarianceError(ScentsError):
    pass


class LassoConvergenceError(ScentsError):
    """Coordinate descent hit ``max_iters`` before meeting ``tol``.

    The last iterate and its KKT residual are kept on the exception.
    """

    def __init__(self, message, coef=None, kkt=None, n_iter=None):
        super().__init__(message)
        self.coef = coef
        self.kkt = kkt
        self.n_iter = n_iter


class BootstrapFailureError(ScentsError):
    pass


class HarnessError(ScentsError):
    pass


class IdentificationWarning(UserWarning):
    """The first-stage coefficient on Z looks indistinguishable from zero."""


class DataFormatError(ScentsError, ValueError):
    """Input file could not be read into a dataset (missing column, bad cell)."""
