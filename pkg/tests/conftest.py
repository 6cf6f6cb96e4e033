from __future__ import annotations

import numpy as np
import pytest

from efftox_design import BivariateModel, CovarianceSpec, DoseRange, ModelFamily, ModelSpec

F = ModelFamily


def emax_mm_model(rho=0.1):
    return BivariateModel(
        ModelSpec(F.EMAX, (0.0, 0.466, 25.0)),
        ModelSpec(F.MICHAELIS_MENTEN, (300.0, 50.0)),
        CovarianceSpec(0.2, 20.0, rho),
    )


def quad_emax_model(rho=0.1):
    return BivariateModel(
        ModelSpec(F.QUADRATIC, (0.5, 0.01, 0.1)),
        ModelSpec(F.EMAX, (0.1, 2.4, 1.2)),
        CovarianceSpec(0.1, 0.4, rho),
    )


def fitted_model(rho=0.387):
    """Emax efficacy and quadratic toxicity fitted to a seven-dose pilot trial."""
    return BivariateModel(
        ModelSpec(F.EMAX, (2.588, 15.64, 0.26)),
        ModelSpec(F.QUADRATIC, (0.24, -11.632, 25.11)),
        CovarianceSpec(7.272, 8.311, rho),
    )


EMAX_MM_RANGE = DoseRange(0.0, 150.0)
QUAD_EMAX_RANGE = DoseRange(0.0, 7.0)
UNIT_RANGE = DoseRange(0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
