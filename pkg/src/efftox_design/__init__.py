"""Locally optimal designs for correlated efficacy-toxicity dose-response trials."""

from .activecontrol import ActiveControlDesign, ControlSpec, extend, rho_p
from .criteria import CriterionSpec, D_OPTIMAL, E_OPTIMAL, c_matrix, efficiency, phi_p
from .design_theory import closed_form_points, minimal_d_design, support_bound
from .equivalence import VerificationReport, sensitivity, sensitivity_curve, verify
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DesignError,
    IdenticalHalfMaxError,
    NoClosedFormError,
    SingularDesignError,
)
from .infomat import (
    BivariateModel,
    CovarianceSpec,
    Design,
    DoseRange,
    design_info,
    make_design,
    pointwise_info,
)
from .models import ModelFamily, ModelSpec
from .pso import DesignProblem, PsoConfig, optimize, polish

__all__ = [
    "ActiveControlDesign", "BivariateModel", "ConfigurationError", "ControlSpec",
    "ConvergenceError", "CovarianceSpec", "CriterionSpec", "D_OPTIMAL", "Design",
    "DesignError", "DesignProblem", "DoseRange", "E_OPTIMAL", "IdenticalHalfMaxError",
    "ModelFamily", "ModelSpec", "NoClosedFormError", "PsoConfig", "SingularDesignError",
    "VerificationReport", "c_matrix", "closed_form_points", "design_info", "efficiency",
    "extend", "make_design", "minimal_d_design", "optimize", "phi_p", "pointwise_info",
    "polish", "rho_p", "sensitivity", "sensitivity_curve", "support_bound", "verify",
]

__version__ = "0.1.0"
