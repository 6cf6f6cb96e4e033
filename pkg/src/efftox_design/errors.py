"""Exception hierarchy shared by the package."""


class DesignError(Exception):
    """Base class for all errors raised by efftox_design."""


class ConfigurationError(DesignError, ValueError):
    """Invalid model, covariance, range or criterion specification."""


class SingularDesignError(DesignError):
    """The design does not make ``K^T theta`` estimable.

    ``rank_deficiency`` is the number of directions of ``Range(K)`` that fall
    outside ``Range(M)``.
    """

    def __init__(self, message, rank_deficiency=None):
        super().__init__(message)
        self.rank_deficiency = rank_deficiency


class NoClosedFormError(DesignError):
    """No closed-form minimally supported design exists for a model pair.

    ``suggested_k`` is the minimal support size to use with the optimizer.
    """

    def __init__(self, message, suggested_k):
        super().__init__(message)
        self.suggested_k = suggested_k


class IdenticalHalfMaxError(ConfigurationError):
    """Both outcomes share the same half-maximal dose where it must differ."""


class ConvergenceError(DesignError):
    """An iterative procedure failed to converge."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])
