from __future__ import annotations

import numpy as np
import pytest

from efftox_design import (
    BivariateModel,
    ConfigurationError,
    CovarianceSpec,
    D_OPTIMAL,
    DesignProblem,
    DoseRange,
    ModelFamily,
    ModelSpec,
    PsoConfig,
    make_design,
    minimal_d_design,
    optimize,
    phi_p,
    polish,
)
from efftox_design.pso import project_simplex

from conftest import QUAD_EMAX_RANGE, quad_emax_model

F = ModelFamily
FAST = PsoConfig(swarm_size=40, iterations=150, restarts=2)


def test_project_simplex():
    np.testing.assert_allclose(project_simplex([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])
    w = project_simplex([0.9, 0.8, -3])
    assert w.sum() == pytest.approx(1.0) and np.all(w >= 0)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        PsoConfig(swarm_size=3)
    with pytest.raises(ConfigurationError):
        PsoConfig(inertia=1.5)


def test_same_seed_gives_identical_design():
    problem = DesignProblem(quad_emax_model(0.5), QUAD_EMAX_RANGE)
    a, da = optimize(problem, FAST)
    b, db = optimize(problem, FAST)
    assert a == b
    assert da.restart_best == db.restart_best


def test_lin_lin_optimum_is_the_two_endpoints():
    bm = BivariateModel(ModelSpec(F.LINEAR, (0, 1)), ModelSpec(F.LINEAR, (1, 2)), CovarianceSpec(1, 3, 0.3))
    xi, diag = optimize(DesignProblem(bm, DoseRange(2, 5)), FAST)
    assert diag.converged
    np.testing.assert_allclose(xi.points, [2, 5], atol=1e-9)
    np.testing.assert_allclose(xi.weights, [0.5, 0.5], atol=1e-9)


def test_optimizer_matches_closed_form_for_equal_counts():
    bm = BivariateModel(ModelSpec(F.EMAX, (0, 0.466, 25)), ModelSpec(F.EMAX, (0.1, 2.4, 60)),
                        CovarianceSpec(0.2, 0.5, 0.6))
    rng = DoseRange(0, 150)
    xi, diag = optimize(DesignProblem(bm, rng), FAST)
    closed = minimal_d_design(bm, rng)
    # the optimum may use more doses, but never does worse than the minimal design
    assert phi_p(xi, bm) >= phi_p(closed, bm) * (1 - 1e-12)
    assert diag.converged


def test_k_below_minimal_support_rejected():
    problem = DesignProblem(quad_emax_model(), QUAD_EMAX_RANGE)
    with pytest.raises(ConfigurationError):
        optimize(problem, PsoConfig(k_max=2))


def test_polish_never_decreases_criterion(rng):
    bm = quad_emax_model(0.5)
    problem = DesignProblem(bm, QUAD_EMAX_RANGE)
    for _ in range(100):
        k = int(rng.integers(3, 6))
        xi = make_design(rng.uniform(0, 7, k), rng.uniform(0.1, 1, k))
        if phi_p(xi, bm) == 0:
            continue
        assert phi_p(polish(xi, problem, max_rounds=3), bm) >= phi_p(xi, bm)


def test_polish_keeps_an_optimum_in_place():
    problem = DesignProblem(quad_emax_model(0.5), QUAD_EMAX_RANGE)
    xi, diag = optimize(problem, FAST)
    again = polish(xi, problem)
    np.testing.assert_allclose(again.points, xi.points, atol=1e-8)
    np.testing.assert_allclose(again.weights, xi.weights, atol=1e-8)


CLOSED_FORM_PAIRS = [
    (ModelSpec(F.LINEAR, (0.2, 1.0)), ModelSpec(F.LINEAR, (1.0, -0.5)), DoseRange(0.5, 4.0)),
    (ModelSpec(F.LINEAR, (0.2, 1.0)), ModelSpec(F.MICHAELIS_MENTEN, (300, 50)), DoseRange(0, 150)),
    (ModelSpec(F.QUADRATIC, (0.5, 0.01, 0.1)), ModelSpec(F.QUADRATIC, (0.1, 1.0, -0.2)), DoseRange(0, 7)),
    (ModelSpec(F.QUADRATIC, (0.5, 0.01, 0.1)), ModelSpec(F.EMAX, (0.1, 2.4, 1.2)), DoseRange(0, 7)),
    (ModelSpec(F.MICHAELIS_MENTEN, (1.0, 2.0)), ModelSpec(F.LINEAR, (0.0, 1.0)), DoseRange(0, 10)),
    (ModelSpec(F.MICHAELIS_MENTEN, (1.0, 2.0)), ModelSpec(F.MICHAELIS_MENTEN, (300, 50)), DoseRange(0, 150)),
    (ModelSpec(F.EMAX, (2.588, 15.64, 0.26)), ModelSpec(F.QUADRATIC, (0.24, -11.632, 25.11)), DoseRange(0, 1)),
    (ModelSpec(F.EMAX, (0.0, 0.466, 25)), ModelSpec(F.EMAX, (0.1, 2.4, 60)), DoseRange(5, 150)),
]


@pytest.mark.parametrize("eff, tox, rng", CLOSED_FORM_PAIRS)
def test_minimal_budget_search_reproduces_closed_form(eff, tox, rng):
    from efftox_design.design_theory import minimal_support_size
    bm = BivariateModel(eff, tox, CovarianceSpec(0.8, 1.7, 0.35))
    k = minimal_support_size(eff.family, tox.family)
    xi, _ = optimize(DesignProblem(bm, rng), PsoConfig(swarm_size=30, iterations=100, restarts=1, k_max=k))
    closed = minimal_d_design(bm, rng)
    np.testing.assert_allclose(xi.points, closed.points, atol=1e-4 * rng.width)
    np.testing.assert_allclose(xi.weights, closed.weights, atol=1e-4)


def test_weights_sum_to_one_and_budget_respected():
    problem = DesignProblem(quad_emax_model(0.1), QUAD_EMAX_RANGE)
    xi, diag = optimize(problem, PsoConfig(swarm_size=30, iterations=100, restarts=1, k_max=6))
    assert xi.size <= 6
    assert abs(xi.weights.sum() - 1) <= 1e-12


def test_polish_recovers_jittered_optimum(rng):
    bm = quad_emax_model(0.1)
    problem = DesignProblem(bm, QUAD_EMAX_RANGE)
    target, _ = optimize(problem, FAST)
    jitter = rng.uniform(-0.1, 0.1, target.size)
    jitter[0] = abs(jitter[0])
    jitter[-1] = -abs(jitter[-1])
    start = make_design(target.points + jitter, target.weights)
    got = polish(start, problem)
    np.testing.assert_allclose(got.points, target.points, atol=0.01)
    np.testing.assert_allclose(got.weights, target.weights, atol=0.01)


def test_diagnostics_record_history():
    problem = DesignProblem(quad_emax_model(0.9), QUAD_EMAX_RANGE)
    xi, diag = optimize(problem, FAST)
    assert len(diag.history) == FAST.restarts
    for hist in diag.history:
        assert len(hist) == FAST.iterations + 1
        assert np.all(np.diff(hist) >= 0)
    assert diag.polished_value >= diag.pso_value * (1 - 1e-12)
    assert diag.report.optimal
