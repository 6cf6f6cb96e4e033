from __future__ import annotations

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from efftox_design import (
    BivariateModel,
    ConfigurationError,
    CovarianceSpec,
    Design,
    DesignError,
    DoseRange,
    ModelFamily,
    ModelSpec,
    design_info,
    make_design,
    pointwise_info,
)
from efftox_design.infomat import batch_design_info, design_index, loewner_geq

from conftest import emax_mm_model, quad_emax_model

F = ModelFamily


def test_point_information_is_symmetric_psd_rank_two():
    bm = quad_emax_model(0.5)
    for d in np.linspace(0, 7, 15):
        info = pointwise_info(bm, d)
        np.testing.assert_allclose(info, info.T)
        lam = np.linalg.eigvalsh(info)
        assert lam[0] > -1e-12 * lam[-1]
        assert np.linalg.matrix_rank(info, tol=1e-9 * lam[-1]) <= 2


def test_point_information_against_explicit_formula():
    bm = emax_mm_model(0.3)
    d = 40.0
    ge, gt = bm.efficacy.gradient(d), bm.toxicity.gradient(d)
    se, st_, r = 0.2, 20.0, 0.3
    c = 1.0 / (1 - r * r)
    ee = np.outer(ge, ge) / se**2
    tt = np.outer(gt, gt) / st_**2
    et = -r * np.outer(ge, gt) / (se * st_)
    expected = c * np.block([[ee, et], [et.T, tt]])
    np.testing.assert_allclose(pointwise_info(bm, d), expected, rtol=1e-12)


def test_information_via_cholesky_factor_of_precision():
    """Assemble M as sum w_k (L^T J_k)^T (L^T J_k) with Sigma^{-1} = L L^T."""
    bm = quad_emax_model(0.9)
    xi = make_design([0, 0.7, 4.0, 7], [0.3, 0.2, 0.2, 0.3])
    L = np.linalg.cholesky(bm.cov.inverse)
    rows = []
    for d, w in zip(xi.points, xi.weights):
        rows.append(np.sqrt(w) * (L.T @ bm.jacobian(d)))
    G = np.vstack(rows)
    np.testing.assert_allclose(G.T @ G, design_info(xi, bm), rtol=1e-10, atol=1e-12)


def test_covariance_inverse():
    cov = CovarianceSpec(0.2, 29.8, 0.0)
    np.testing.assert_allclose(cov.inverse, np.diag([25.0, 1 / 888.04]))
    cov = CovarianceSpec(1.3, 0.7, -0.6)
    np.testing.assert_allclose(cov.inverse @ cov.matrix, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
def test_covariance_rejects_degenerate_correlation(rho):
    with pytest.raises(ConfigurationError):
        CovarianceSpec(1.0, 1.0, rho)


def test_design_information_is_weighted_sum():
    bm = emax_mm_model()
    xi = make_design([0, 23.84, 150], [0.2, 0.4, 0.4])
    M = sum(w * pointwise_info(bm, d) for d, w in zip(xi.points, xi.weights))
    np.testing.assert_allclose(design_info(xi, bm), M)


def test_batch_information_matches_single():
    bm = quad_emax_model()
    pts = np.array([[0, 1, 7], [0.5, 2, 6]])
    w = np.array([[0.2, 0.3, 0.5], [1 / 3, 1 / 3, 1 / 3]])
    Ms = batch_design_info(pts, w, bm)
    for i in range(2):
        np.testing.assert_allclose(Ms[i], design_info(Design(pts[i], w[i]), bm))


def test_make_design_sorts_merges_and_normalizes():
    xi = make_design([5.0, 1.0, 1.0 + 1e-12], [2, 1, 1], DoseRange(0, 10))
    np.testing.assert_allclose(xi.points, [1.0 + 5e-13, 5.0])
    np.testing.assert_allclose(xi.weights, [0.5, 0.5])


def test_design_rejects_bad_input():
    with pytest.raises(DesignError):
        Design([0, 1], [0.5, 0.6])
    with pytest.raises(DesignError):
        Design([1, 0], [0.5, 0.5])
    with pytest.raises(DesignError):
        Design([0, 1], [1.0, 0.0])
    with pytest.raises(DesignError):
        make_design([0, 11], None, DoseRange(0, 10))


def test_design_arrays_are_read_only():
    xi = make_design([0, 1])
    with pytest.raises(ValueError):
        xi.points[0] = 3.0


def test_design_index_counts_boundary_points_half():
    rng = DoseRange(0, 7)
    assert design_index(make_design([0, 1.94, 7]), rng) == 2.0
    assert design_index(make_design([0.5, 1.94, 6]), rng) == 3.0


def test_loewner_order():
    A = np.diag([2.0, 1.0])
    assert loewner_geq(A, np.eye(2))
    assert not loewner_geq(np.eye(2), A)
    with pytest.raises(ValueError):
        loewner_geq(np.eye(2), np.eye(3))


def _two_point_det_oracle(bt, th_t, cov, d1, d2, w):
    """Closed-form determinant for linear efficacy / Michaelis-Menten toxicity.

    With H = Sigma^{-1} the information of a two-point design factorizes as
    F^T (W kron H) F, where F stacks the 2 x 4 Jacobians; for two points F is
    square, so det M = w^2 (1-w)^2 det(H)^2 det(F)^2.
    """
    # rows of F: (eff at d1, tox at d1, eff at d2, tox at d2)
    def mm_grad(d):
        return np.array([d / (bt + d), -th_t[0] * d / (bt + d) ** 2])

    det_eff = d2 - d1
    g1, g2 = mm_grad(d1), mm_grad(d2)
    det_tox = g1[0] * g2[1] - g1[1] * g2[0]
    det_h = np.linalg.det(cov.inverse)
    return (w * (1 - w)) ** 2 * det_h**2 * det_eff**2 * det_tox**2


@settings(max_examples=1000, deadline=None)
@given(
    a=st.floats(-3, 3), b=st.floats(-3, 3), emax=st.floats(0.5, 50), ed50=st.floats(0.5, 20),
    rho=st.floats(-0.9, 0.9), se=st.floats(0.2, 5), stt=st.floats(0.2, 5),
    d1=st.floats(0.5, 20), gap=st.floats(1.0, 40), w=st.floats(0.1, 0.9),
)
def test_two_point_determinant_oracle(a, b, emax, ed50, rho, se, stt, d1, gap, w):
    cov = CovarianceSpec(se, stt, rho)
    bm = BivariateModel(ModelSpec(F.LINEAR, (a, b)), ModelSpec(F.MICHAELIS_MENTEN, (emax, ed50)), cov)
    d2 = d1 + gap
    xi = Design([d1, d2], [w, 1 - w])
    M = design_info(xi, bm)
    # rounding in the entries of M alone perturbs det M by about cond(M) * eps,
    # so the 1e-10 comparison is meaningful only for well-conditioned designs
    assume(np.linalg.cond(M) < 1e5)
    expected = _two_point_det_oracle(ed50, (emax, ed50), cov, d1, d2, w)
    dsq = np.sqrt(np.diag(M))
    got = np.prod(np.diag(M)) * np.linalg.det(M / np.outer(dsq, dsq))
    assert got == pytest.approx(expected, rel=1e-10)
