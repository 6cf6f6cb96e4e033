"""Fisher information for the correlated efficacy-toxicity model.

A single observation at dose ``d`` is bivariate normal with mean
``(eta_e(d), eta_t(d))`` and covariance ``Sigma``.  Its information about the
stacked parameter vector ``theta = (theta_e, theta_t)`` is

    I(d) = J(d)^T Sigma^{-1} J(d)

where ``J(d)`` is the 2 x s Jacobian with the efficacy gradient in the first
row (first ``s_e`` columns) and the toxicity gradient in the second row.
An approximate design averages ``I(d)`` over its support.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DesignError
from .models import ModelSpec


@dataclass(frozen=True)
class CovarianceSpec:
    sigma_e: float
    sigma_t: float
    rho: float

    def __post_init__(self):
        for name in ("sigma_e", "sigma_t", "rho"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.sigma_e > 0 and self.sigma_t > 0):
            raise ConfigurationError("standard deviations must be positive")
        if not -1.0 < self.rho < 1.0:
            raise ConfigurationError(f"correlation must lie in (-1, 1), got {self.rho}")

    @property
    def matrix(self) -> np.ndarray:
        se, st, r = self.sigma_e, self.sigma_t, self.rho
        return np.array([[se * se, r * se * st], [r * se * st, st * st]])

    @property
    def inverse(self) -> np.ndarray:
        se, st, r = self.sigma_e, self.sigma_t, self.rho
        c = 1.0 / (1.0 - r * r)
        return c * np.array(
            [[1.0 / (se * se), -r / (se * st)], [-r / (se * st), 1.0 / (st * st)]]
        )

    def scaled(self, factor: float) -> "CovarianceSpec":
        """Covariance multiplied by ``factor`` (standard deviations by its root)."""
        s = np.sqrt(factor)
        return CovarianceSpec(self.sigma_e * s, self.sigma_t * s, self.rho)


@dataclass(frozen=True)
class BivariateModel:
    efficacy: ModelSpec
    toxicity: ModelSpec
    cov: CovarianceSpec

    def __post_init__(self):
        if not 4 <= self.n_params <= 6:
            raise ConfigurationError(f"unsupported parameter dimension {self.n_params}")

    @property
    def n_params(self) -> int:
        return self.efficacy.n_params + self.toxicity.n_params

    def jacobian(self, d) -> np.ndarray:
        """Stacked gradients, shape ``d.shape + (2, n_params)``."""
        d = np.asarray(d, dtype=float)
        se = self.efficacy.n_params
        jac = np.zeros(d.shape + (2, self.n_params))
        jac[..., 0, :se] = self.efficacy.gradient(d)
        jac[..., 1, se:] = self.toxicity.gradient(d)
        return jac

    def with_cov(self, cov: CovarianceSpec) -> "BivariateModel":
        return BivariateModel(self.efficacy, self.toxicity, cov)


@dataclass(frozen=True)
class DoseRange:
    L: float
    R: float

    def __post_init__(self):
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "R", float(self.R))
        if not (self.L >= 0 and self.R > self.L and np.isfinite(self.R)):
            raise ConfigurationError(f"invalid dose range [{self.L}, {self.R}]")

    @property
    def width(self) -> float:
        return self.R - self.L

    @property
    def boundary_tol(self) -> float:
        return 1e-12 * max(1.0, abs(self.L), abs(self.R))

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.L, self.R, int(n))

    def contains(self, d) -> bool:
        tol = self.boundary_tol
        d = np.asarray(d, dtype=float)
        return bool(np.all((d >= self.L - tol) & (d <= self.R + tol)))


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Design:
    """Approximate design: strictly increasing doses with positive weights.

    Use :func:`make_design` to build one from unsorted or duplicated input.
    """

    points: np.ndarray
    weights: np.ndarray = field(repr=True)

    def __post_init__(self):
        pts, w = _readonly(np.ravel(self.points)), _readonly(np.ravel(self.weights))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.size == 0 or pts.shape != w.shape:
            raise DesignError("points and weights must be non-empty and equally long")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise DesignError("non-finite design entries")
        if np.any(w <= 0):
            raise DesignError(f"weights must be strictly positive, got {w}")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DesignError(f"weights sum to {w.sum():.15g}, not 1")
        if np.any(np.diff(pts) <= 0):
            raise DesignError(f"points must be strictly increasing, got {pts}")

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        if not isinstance(other, Design):
            return NotImplemented
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.weights, other.weights
        )

    def __hash__(self):
        return hash((self.points.tobytes(), self.weights.tobytes()))

    @property
    def size(self) -> int:
        return self.points.size

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "weights": self.weights.tolist()}


def make_design(points, weights=None, dose_range: DoseRange | None = None,
                merge_tol: float | None = None) -> Design:
    """Build a :class:`Design`, sorting, merging near-duplicates and normalizing.

    Points closer than ``merge_tol`` (default ``1e-9 * (R - L)``, or
    ``1e-9 * max(1, max|d|)`` without a range) are merged, with their weights
    summed and the merged dose placed at the weighted mean.  ``weights``
    defaults to uniform; they are rescaled to sum to one.
    """
    pts = np.ravel(np.asarray(points, dtype=float))
    if weights is None:
        w = np.full(pts.size, 1.0 / max(pts.size, 1))
    else:
        w = np.ravel(np.asarray(weights, dtype=float))
    if pts.shape != w.shape:
        raise DesignError("points and weights must be equally long")
    if np.any(w < 0) or not np.any(w > 0):
        raise DesignError("weights must be non-negative with positive total")
    if dose_range is not None:
        if not dose_range.contains(pts):
            raise DesignError(f"design points {pts} outside [{dose_range.L}, {dose_range.R}]")
        pts = np.clip(pts, dose_range.L, dose_range.R)
    if merge_tol is None:
        if dose_range is not None:
            merge_tol = 1e-9 * dose_range.width
        else:
            merge_tol = 1e-9 * max(1.0, float(np.max(np.abs(pts))) if pts.size else 1.0)
    keep = w > 0
    pts, w = pts[keep], w[keep]
    order = np.argsort(pts, kind="stable")
    pts, w = pts[order], w[order]

    merged_p, merged_w = [], []
    for d, wi in zip(pts, w):
        if merged_p and d - merged_p[-1] <= merge_tol:
            tot = merged_w[-1] + wi
            merged_p[-1] = (merged_p[-1] * merged_w[-1] + d * wi) / tot
            merged_w[-1] = tot
        else:
            merged_p.append(d)
            merged_w.append(wi)
    mp, mw = np.array(merged_p), np.array(merged_w)
    mw = mw / mw.sum()
    return Design(mp, mw)


def pointwise_info(bm: BivariateModel, d) -> np.ndarray:
    """Fisher information of one observation at dose(s) ``d``.

    Shape ``d.shape + (s, s)``; each matrix is symmetric PSD of rank <= 2.
    """
    jac = bm.jacobian(d)
    sinv = bm.cov.inverse
    info = np.einsum("...ai,ab,...bj->...ij", jac, sinv, jac)
    return 0.5 * (info + np.swapaxes(info, -1, -2))


def design_info(xi: Design, bm: BivariateModel) -> np.ndarray:
    """Normalized information matrix ``sum_i w_i I(d_i)``."""
    return np.einsum("k,kij->ij", xi.weights, pointwise_info(bm, xi.points))


def batch_design_info(points, weights, bm: BivariateModel) -> np.ndarray:
    """Information matrices for a stack of designs given as ``(n, k)`` arrays."""
    return np.einsum("nk,nkij->nij", weights, pointwise_info(bm, points))


def loewner_geq(A, B, tol: float = 1e-10) -> bool:
    """True iff ``A - B`` is positive semidefinite up to ``-tol``."""
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    diff = A - B
    return bool(np.linalg.eigvalsh(0.5 * (diff + diff.T))[0] >= -tol)


def design_index(xi: Design, dose_range: DoseRange) -> float:
    """Interior support points count 1, boundary points count 1/2."""
    if not dose_range.contains(xi.points):
        raise DesignError(f"design points {xi.points} outside [{dose_range.L}, {dose_range.R}]")
    tol = dose_range.boundary_tol
    at_edge = (np.abs(xi.points - dose_range.L) <= tol) | (np.abs(xi.points - dose_range.R) <= tol)
    return float(np.sum(~at_edge) + 0.5 * np.sum(at_edge))
