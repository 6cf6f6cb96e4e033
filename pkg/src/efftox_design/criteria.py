"""Kiefer's phi_p criteria for linear parameter systems ``K^T theta``.

For a design with information matrix ``M`` the information for ``K^T theta``
is ``C = (K^T M^- K)^{-1}`` and

    phi_p = ((1/m) tr C^p)^{1/p}     finite p != 0
    phi_0 = det(C)^{1/m}
    phi_-inf = lambda_min(C)

Designs that do not make ``K^T theta`` estimable score 0 under ``phi_p`` but
raise :class:`SingularDesignError` in :func:`c_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._search import grid_max
from .errors import ConfigurationError, SingularDesignError
from .infomat import BivariateModel, Design, DoseRange, design_info, pointwise_info

PINV_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class CriterionSpec:
    """Exponent ``p`` in [-inf, 1) and coefficient matrix ``K`` (default I)."""

    p: float = 0.0
    K: np.ndarray | None = None

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p >= 1.0 or p == math.inf:
            raise ConfigurationError(f"criterion exponent must lie in [-inf, 1), got {self.p}")
        object.__setattr__(self, "p", p)
        if self.K is not None:
            K = np.array(self.K, dtype=float)
            if K.ndim == 1:
                K = K[:, None]
            if K.ndim != 2 or np.linalg.matrix_rank(K) != K.shape[1]:
                raise ConfigurationError("K must have full column rank")
            K.flags.writeable = False
            object.__setattr__(self, "K", K)

    @property
    def is_e_optimal(self) -> bool:
        return self.p == -math.inf

    def k_matrix(self, s: int) -> np.ndarray:
        if self.K is None:
            return np.eye(s)
        if self.K.shape[0] != s:
            raise ConfigurationError(f"K has {self.K.shape[0]} rows, model has {s} parameters")
        return self.K

    def m(self, s: int) -> int:
        return s if self.K is None else self.K.shape[1]


D_OPTIMAL = CriterionSpec(0.0)
E_OPTIMAL = CriterionSpec(-math.inf)


def sym_eigh(A):
    A = np.asarray(A, dtype=float)
    return np.linalg.eigh(0.5 * (A + A.T))


def sym_power(A, p):
    """``A^p`` for symmetric PSD ``A`` (negative eigenvalues clipped to 0)."""
    lam, V = sym_eigh(A)
    lam = np.clip(lam, 0.0, None)
    if p == 0:
        return np.eye(A.shape[0])
    return (V * lam**p) @ V.T


def pinv_sym(M, cutoff=PINV_CUTOFF):
    """Moore-Penrose inverse of a symmetric PSD matrix.

    Returns ``(G, null_basis)`` where ``null_basis`` spans the eigenvectors
    whose eigenvalue falls below ``cutoff * lambda_max``.
    """
    lam, V = sym_eigh(M)
    top = max(lam[-1], 0.0)
    keep = lam > cutoff * top if top > 0 else np.zeros_like(lam, dtype=bool)
    G = (V[:, keep] / lam[keep]) @ V[:, keep].T
    return G, V[:, ~keep]


def c_matrix_from_info(M, K):
    """Return ``(C, G)`` for information matrix ``M``.

    Raises :class:`SingularDesignError` if ``Range(K)`` is not contained in
    ``Range(M)``.
    """
    K = np.asarray(K, dtype=float)
    G, null = pinv_sym(M)
    if null.shape[1]:
        leak = null.T @ K
        sv = np.linalg.svd(leak, compute_uv=False)
        deficiency = int(np.sum(sv > 1e-8 * max(1.0, np.linalg.norm(K, 2))))
        if deficiency:
            raise SingularDesignError(
                f"K^T theta is not estimable: rank deficiency {deficiency}",
                rank_deficiency=deficiency,
            )
    lam, V = sym_eigh(K.T @ G @ K)
    if lam[0] <= 0:
        raise SingularDesignError("K^T M^- K is singular", rank_deficiency=int(np.sum(lam <= 0)))
    C = (V / lam) @ V.T
    return 0.5 * (C + C.T), G


def c_matrix(xi: Design, bm: BivariateModel, K=None):
    """Information matrix ``(K^T M^- K)^{-1}`` for ``K^T theta``."""
    M = design_info(xi, bm)
    K = np.eye(bm.n_params) if K is None else np.asarray(K, dtype=float)
    if K.ndim == 1:
        K = K[:, None]
    return c_matrix_from_info(M, K)[0]


def phi_from_eigs(lam, p):
    """Criterion value from the eigenvalues of ``C`` (all assumed > 0)."""
    lam = np.asarray(lam, dtype=float)
    if p == -math.inf:
        return float(lam.min())
    if p == 0:
        return float(np.exp(np.mean(np.log(lam))))
    return float(np.mean(lam**p) ** (1.0 / p))


def phi_p_from_info(M, crit: CriterionSpec) -> float:
    s = M.shape[0]
    if crit.K is None:
        # C = M exactly; skipping the double inversion keeps full precision
        lam = np.linalg.eigvalsh(0.5 * (M + M.T))
        if lam[-1] <= 0 or lam[0] <= PINV_CUTOFF * lam[-1]:
            return 0.0
        return phi_from_eigs(lam, crit.p)
    try:
        C, _ = c_matrix_from_info(M, crit.k_matrix(s))
    except SingularDesignError:
        return 0.0
    return phi_from_eigs(np.linalg.eigvalsh(C), crit.p)


def phi_p(xi: Design, bm: BivariateModel, crit: CriterionSpec = D_OPTIMAL) -> float:
    """Criterion value of ``xi``; 0 when ``K^T theta`` is not estimable."""
    return phi_p_from_info(design_info(xi, bm), crit)


def batch_phi_p(Ms, crit: CriterionSpec) -> np.ndarray:
    """Criterion values for a stack of information matrices ``(n, s, s)``."""
    Ms = np.asarray(Ms, dtype=float)
    if crit.K is not None:
        return np.array([phi_p_from_info(M, crit) for M in Ms])
    lam = np.linalg.eigvalsh(Ms)
    top = lam[:, -1]
    ok = (top > 0) & (lam[:, 0] > PINV_CUTOFF * top)
    out = np.zeros(Ms.shape[0])
    good = lam[ok]
    if good.size:
        p = crit.p
        if p == -math.inf:
            out[ok] = good[:, 0]
        elif p == 0:
            out[ok] = np.exp(np.mean(np.log(good), axis=1))
        else:
            out[ok] = np.mean(good**p, axis=1) ** (1.0 / p)
    return out


def efficiency(xi: Design, reference: Design, bm: BivariateModel,
               crit: CriterionSpec = D_OPTIMAL) -> float:
    """phi_p efficiency of ``xi`` relative to ``reference``."""
    ref = phi_p(reference, bm, crit)
    if ref <= 0:
        raise SingularDesignError("reference design is singular for this criterion")
    return phi_p(xi, bm, crit) / ref


@dataclass(frozen=True, eq=False)
class SensitivityParts:
    """Pieces of the sensitivity ``d -> tr(I(d) A) - offset``.

    For finite p, ``A = G K C^{p+1} K^T G`` and ``offset = tr(C^p)``.
    """

    A: np.ndarray
    offset: float
    C: np.ndarray
    G: np.ndarray

    def directional(self, bm: BivariateModel, d):
        """``tr(I(d) A)``, vectorized over ``d``."""
        info = pointwise_info(bm, np.asarray(d, dtype=float))
        return np.einsum("...ij,ji->...", info, self.A)

    def __call__(self, bm, d):
        return self.directional(bm, d) - self.offset


def finite_p_parts(M, crit: CriterionSpec) -> SensitivityParts:
    if crit.is_e_optimal:
        raise ConfigurationError("finite_p_parts needs a finite exponent")
    K = crit.k_matrix(M.shape[0])
    C, G = c_matrix_from_info(M, K)
    GK = G @ K
    A = GK @ sym_power(C, crit.p + 1.0) @ GK.T
    offset = float(np.trace(sym_power(C, crit.p)))
    return SensitivityParts(0.5 * (A + A.T), offset, C, G)


def efficiency_lower_bound(xi: Design, bm: BivariateModel, crit: CriterionSpec,
                           dose_range: DoseRange, grid_n: int = 1001) -> float:
    """Lower bound on the phi_p efficiency that needs no optimal design.

    ``tr(C^p) / max_d tr(I(d) G K C^{p+1} K^T G)`` with the max taken on a
    grid and refined by golden-section search.
    """
    if crit.is_e_optimal:
        raise ConfigurationError("the efficiency bound is defined for finite p only")
    parts = finite_p_parts(design_info(xi, bm), crit)
    _, top, _, _ = grid_max(lambda d: parts.directional(bm, d), dose_range.L, dose_range.R, grid_n)
    return parts.offset / top
