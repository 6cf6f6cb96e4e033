"""Sensitivity functions and optimality checks via the equivalence theorem.

A design is phi_p-optimal iff its sensitivity function is <= 0 on the whole
dose range, with equality at the support points.  For finite p the
sensitivity is

    s(d) = tr(I(d) G K C^{p+1} K^T G) - tr(C^p)

and for p = -inf

    s(d) = tr(I(d) G K C E C K^T G) - lambda_min(C)

with ``E`` a trace-one PSD matrix supported on the eigenspace of
``lambda_min(C)``.  When that eigenvalue is simple ``E = v v^T``; otherwise
``E`` is chosen on a grid by a small linear program that minimizes the
maximal sensitivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from ._search import grid_max
from .criteria import (
    CriterionSpec,
    D_OPTIMAL,
    SensitivityParts,
    c_matrix_from_info,
    finite_p_parts,
    sym_eigh,
)
from .infomat import BivariateModel, Design, DoseRange, design_info, pointwise_info

DEFAULT_GRID = 2001
DEFAULT_TOL = 1e-6
EIGEN_GAP = 1e-8


@dataclass
class VerificationReport:
    max_sensitivity: float
    argmax_dose: float
    optimal: bool
    tolerance: float
    scale: float
    efficiency_lower_bound: float | None = None
    support_sensitivity: list = field(default_factory=list)
    curve: list | None = None

    @property
    def relative_max(self) -> float:
        return self.max_sensitivity / self.scale

    def to_dict(self) -> dict:
        out = {
            "max_sensitivity": self.max_sensitivity,
            "argmax_dose": self.argmax_dose,
            "optimal": self.optimal,
            "tolerance": self.tolerance,
            "scale": self.scale,
            "efficiency_lower_bound": self.efficiency_lower_bound,
            "support_sensitivity": list(self.support_sensitivity),
        }
        return out


def _e_optimal_parts(M, crit, bm, grid):
    K = crit.k_matrix(M.shape[0])
    C, G = c_matrix_from_info(M, K)
    lam, V = sym_eigh(C)
    lmin = lam[0]
    cluster = np.flatnonzero(lam - lmin <= EIGEN_GAP * max(abs(lmin), 1e-300))
    U = G @ K @ C @ V[:, cluster]
    if cluster.size == 1:
        alpha = np.ones(1)
    else:
        info = pointwise_info(bm, grid)
        # a[j, i] = u_i^T I(d_j) u_i; choose alpha on the simplex minimizing
        # max_j a[j] @ alpha
        a = np.einsum("ki,jkl,li->ji", U, info, U)
        n = cluster.size
        c = np.zeros(n + 1)
        c[-1] = 1.0
        A_ub = np.hstack([a, -np.ones((a.shape[0], 1))])
        A_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
        res = linprog(c, A_ub=A_ub, b_ub=np.zeros(a.shape[0]), A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, None)] * n + [(None, None)], method="highs")
        alpha = np.clip(res.x[:n], 0, None) if res.success else np.full(n, 1.0 / n)
        alpha /= alpha.sum()
    A = (U * alpha) @ U.T
    return SensitivityParts(0.5 * (A + A.T), float(lmin), C, G)


def sensitivity_parts(xi: Design, bm: BivariateModel, crit: CriterionSpec = D_OPTIMAL,
                      dose_range: DoseRange | None = None,
                      grid_n: int = DEFAULT_GRID) -> SensitivityParts:
    """Matrix ``A`` and offset such that ``s(d) = tr(I(d) A) - offset``."""
    M = design_info(xi, bm)
    if not crit.is_e_optimal:
        return finite_p_parts(M, crit)
    if dose_range is None:
        lo, hi = xi.points[0], xi.points[-1]
    else:
        lo, hi = dose_range.L, dose_range.R
    return _e_optimal_parts(M, crit, bm, np.linspace(lo, hi, grid_n))


def sensitivity(xi: Design, bm: BivariateModel, crit: CriterionSpec, d,
                dose_range: DoseRange | None = None):
    """Sensitivity of ``xi`` at dose(s) ``d`` (vectorized)."""
    parts = sensitivity_parts(xi, bm, crit, dose_range)
    return parts(bm, d)


def sensitivity_curve(xi: Design, bm: BivariateModel, crit: CriterionSpec,
                      dose_range: DoseRange, grid_n: int = DEFAULT_GRID):
    """Sensitivity sampled on ``grid_n`` equispaced doses, as (dose, value) pairs."""
    parts = sensitivity_parts(xi, bm, crit, dose_range, grid_n)
    grid = dose_range.grid(grid_n)
    vals = parts(bm, grid)
    return list(zip(grid.tolist(), vals.tolist()))


def verify(xi: Design, bm: BivariateModel, crit: CriterionSpec, dose_range: DoseRange,
           grid_n: int = DEFAULT_GRID, tol: float = DEFAULT_TOL,
           keep_curve: bool = False) -> VerificationReport:
    """Check the equivalence-theorem inequality on a refined grid.

    ``tol`` is relative to ``|tr(C^p)|`` (finite p) or ``lambda_min(C)``.
    """
    parts = sensitivity_parts(xi, bm, crit, dose_range, grid_n)
    x, top, grid, vals = grid_max(lambda d: parts(bm, d), dose_range.L, dose_range.R, grid_n)
    scale = abs(parts.offset)
    tolerance = tol * scale
    lower = None
    if not crit.is_e_optimal:
        lower = parts.offset / (top + parts.offset)
    report = VerificationReport(
        max_sensitivity=float(top),
        argmax_dose=float(x),
        optimal=bool(top <= tolerance),
        tolerance=float(tolerance),
        scale=float(scale),
        efficiency_lower_bound=None if lower is None else float(lower),
        support_sensitivity=parts(bm, xi.points).tolist(),
    )
    if keep_curve:
        report.curve = list(zip(grid.tolist(), vals.tolist()))
    return report
