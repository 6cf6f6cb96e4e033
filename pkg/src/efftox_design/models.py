"""Dose-response mean functions and their parameter gradients.

Four families are supported, with parameters ordered as in the usual
textbook forms (intercept first where present):

==================  ===========================  =====================
family              mean                         params
==================  ===========================  =====================
Linear              a + b d                      (a, b)
Quadratic           a + b d + c d^2              (a, b, c)
MichaelisMenten     emax d / (ed50 + d)          (emax, ed50)
Emax                e0 + emax d / (ed50 + d)     (e0, emax, ed50)
==================  ===========================  =====================

``mean`` and ``gradient`` broadcast over arrays of doses.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


class ModelFamily(str, enum.Enum):
    LINEAR = "Linear"
    QUADRATIC = "Quadratic"
    MICHAELIS_MENTEN = "MichaelisMenten"
    EMAX = "Emax"

    @classmethod
    def parse(cls, name: str) -> "ModelFamily":
        """Look up a family by its name, ignoring case, ``-`` and ``_``."""
        key = str(name).replace("-", "").replace("_", "").lower()
        for fam in cls:
            if fam.value.lower() == key:
                return fam
        raise ConfigurationError(f"unknown model family {name!r}")


_PARAM_COUNT = {
    ModelFamily.LINEAR: 2,
    ModelFamily.QUADRATIC: 3,
    ModelFamily.MICHAELIS_MENTEN: 2,
    ModelFamily.EMAX: 3,
}


def param_count(family: ModelFamily) -> int:
    return _PARAM_COUNT[ModelFamily(family)]


@dataclass(frozen=True)
class ModelSpec:
    """A univariate mean function: family plus nominal parameter vector."""

    family: ModelFamily
    params: tuple

    def __post_init__(self):
        fam = ModelFamily(self.family)
        object.__setattr__(self, "family", fam)
        params = tuple(float(v) for v in np.ravel(self.params))
        object.__setattr__(self, "params", params)
        n = param_count(fam)
        if len(params) != n:
            raise ConfigurationError(
                f"{fam.value} needs {n} parameters, got {len(params)}"
            )
        if not all(np.isfinite(params)):
            raise ConfigurationError(f"non-finite parameter in {params}")
        if fam in (ModelFamily.MICHAELIS_MENTEN, ModelFamily.EMAX) and params[-1] <= 0:
            raise ConfigurationError(
                f"{fam.value} half-maximal dose must be positive, got {params[-1]}",
            )

    @property
    def n_params(self) -> int:
        return len(self.params)

    @property
    def ed50(self) -> float | None:
        """Half-maximal dose for the saturating families, else None."""
        if self.family in (ModelFamily.MICHAELIS_MENTEN, ModelFamily.EMAX):
            return self.params[-1]
        return None

    def mean(self, d):
        return mean(self, d)

    def gradient(self, d):
        return gradient(self, d)


def mean(model: ModelSpec, d):
    """Mean response of ``model`` at dose(s) ``d``."""
    d = np.asarray(d, dtype=float)
    fam, th = model.family, model.params
    if fam is ModelFamily.LINEAR:
        return th[0] + th[1] * d
    if fam is ModelFamily.QUADRATIC:
        return th[0] + th[1] * d + th[2] * d * d
    if fam is ModelFamily.MICHAELIS_MENTEN:
        return th[0] * d / (th[1] + d)
    return th[0] + th[1] * d / (th[2] + d)


def gradient(model: ModelSpec, d):
    """Gradient of the mean with respect to the parameters.

    Returns an array of shape ``d.shape + (n_params,)``.
    """
    d = np.asarray(d, dtype=float)
    fam, th = model.family, model.params
    one = np.ones_like(d)
    if fam is ModelFamily.LINEAR:
        cols = (one, d)
    elif fam is ModelFamily.QUADRATIC:
        cols = (one, d, d * d)
    elif fam is ModelFamily.MICHAELIS_MENTEN:
        den = th[1] + d
        cols = (d / den, -th[0] * d / den**2)
    else:
        den = th[2] + d
        cols = (one, d / den, -th[1] * d / den**2)
    return np.stack(cols, axis=-1)
