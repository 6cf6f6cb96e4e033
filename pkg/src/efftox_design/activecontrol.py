"""Active-controlled trials: a drug design plus one control arm.

The control arm observes a bivariate normal outcome whose mean is taken to be
the 2-vector ``theta_2`` itself, so its information is ``Sigma_2^{-1}``.  With
control weight ``w`` the joint information matrix is block diagonal,

    (1 - w) M_1(xi)  (+)  w I_2 ,

and an optimal drug design extends to an optimal active-controlled design by
giving the control arm weight ``1 / (1 + rho_p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from ._search import golden_section_max
from .criteria import CriterionSpec, phi_p_from_info, sym_eigh
from .errors import ConfigurationError, SingularDesignError
from .infomat import BivariateModel, CovarianceSpec, Design, design_info, loewner_geq


@dataclass(frozen=True)
class ControlSpec:
    cov: CovarianceSpec
    dose_label: float = 0.0
    mean_dim: int = 2


@dataclass(frozen=True, eq=False)
class ActiveControlDesign:
    drug_design: Design
    control_weight: float
    control_dose: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.control_weight < 1.0:
            raise ConfigurationError(f"control weight must lie in (0, 1), got {self.control_weight}")

    @property
    def drug_weights(self) -> np.ndarray:
        """Overall proportions allocated to each drug dose."""
        return (1.0 - self.control_weight) * self.drug_design.weights

    def to_dict(self) -> dict:
        return {
            "drug_points": self.drug_design.points.tolist(),
            "drug_weights": self.drug_weights.tolist(),
            "normalized_drug_weights": self.drug_design.weights.tolist(),
            "control_dose": self.control_dose,
            "control_weight": self.control_weight,
        }


def control_info(ctrl: ControlSpec) -> np.ndarray:
    return ctrl.cov.inverse


def block_info_from(M1, I2, w):
    return block_diag((1.0 - w) * M1, w * I2)


def block_info(ac: ActiveControlDesign, bm: BivariateModel, ctrl: ControlSpec) -> np.ndarray:
    """Joint information matrix of drug and control samples."""
    return block_info_from(design_info(ac.drug_design, bm), control_info(ctrl), ac.control_weight)


def rho_p(xi_star: Design, bm: BivariateModel, ctrl: ControlSpec, p: float) -> float:
    """Ratio of drug to control allocation for an optimal drug design.

    ``p = 0`` gives ``s/2``; ``p = -inf`` the ratio of smallest eigenvalues;
    otherwise ``(tr I_2^p / tr M_1^p)^{1/(p-1)}``.
    """
    M1 = design_info(xi_star, bm)
    lam1 = np.linalg.eigvalsh(M1)
    if lam1[0] <= 1e-12 * lam1[-1]:
        raise SingularDesignError("drug design has a singular information matrix")
    lam2 = np.linalg.eigvalsh(control_info(ctrl))
    p = float(p)
    if p == 0.0:
        return bm.n_params / 2.0
    if p == -math.inf:
        return float(lam2[0] / lam1[0])
    if not p < 1.0:
        raise ConfigurationError(f"p must be below 1, got {p}")
    return float((np.sum(lam2**p) / np.sum(lam1**p)) ** (1.0 / (p - 1.0)))


def extend(xi_star: Design, bm: BivariateModel, ctrl: ControlSpec, p: float) -> ActiveControlDesign:
    """Optimal active-controlled design built from an optimal drug design."""
    rho = rho_p(xi_star, bm, ctrl, p)
    return ActiveControlDesign(xi_star, 1.0 / (1.0 + rho), ctrl.dose_label)


def optimal_control_weight_numeric(xi_star: Design, bm: BivariateModel, ctrl: ControlSpec,
                                   p: float, tol: float = 1e-8) -> float:
    """Control weight maximizing phi_p of the joint matrix, by golden section."""
    M1, I2 = design_info(xi_star, bm), control_info(ctrl)
    crit = CriterionSpec(p)
    if p == 0.0:
        # log-determinant keeps the objective well scaled near the ends
        def f(w):
            return np.linalg.slogdet(block_info_from(M1, I2, w))[1]
    else:
        def f(w):
            return phi_p_from_info(block_info_from(M1, I2, w), crit)
    w, _ = golden_section_max(f, 1e-12, 1.0 - 1e-12, tol=tol)
    return float(w)


def admissible_transfer_check(xi: Design, eta: Design, bm: BivariateModel, ctrl: ControlSpec,
                              w: float, tol: float = 1e-10) -> bool:
    """False iff the extension of ``eta`` strictly dominates that of ``xi``.

    Both drug designs are extended with the same control weight ``w`` and
    their joint matrices compared in the Loewner order.
    """
    A = block_info_from(design_info(xi, bm), control_info(ctrl), w)
    B = block_info_from(design_info(eta, bm), control_info(ctrl), w)
    if A.shape != B.shape:
        raise ValueError("designs belong to models of different dimension")
    if not loewner_geq(B, A, tol):
        return True
    lam = sym_eigh(B - A)[0]
    return bool(lam[-1] <= tol)
