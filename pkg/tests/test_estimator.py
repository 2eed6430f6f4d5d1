import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llosim.controllers import Feedback, FreeRun, HffBlock, HffMoving
from llosim.errors import EstimatorError
from llosim.estimator import (
    CovarianceBlocks,
    LinearFunctional,
    accuracy_analytic,
    accuracy_of_coefficients,
    build_sigma,
    correlation_condition,
    llo_covariance,
    predictor_coeffs_mmse,
    predictor_coeffs_paper,
    unroll_functionals,
)
from llosim.ramsey import MeasurementWindow, build_schedule
from llosim.spectra import PowerSpectrum, Spur, white
from llosim.xfer import CovarianceTable, Point, true_variance

W = MeasurementWindow
FLICKER = PowerSpectrum(1.0, 1.0, 0.05, 100.0)


def blocks(M, F, s=1.0):
    return CovarianceBlocks(np.atleast_2d(np.asarray(M, float)), np.atleast_1d(np.asarray(F, float)), s)


def test_build_sigma_structure():
    wins = [W(0, 0.4), W(0.4, 1.0)]
    b = build_sigma(FLICKER, wins, 2.0)
    assert np.array_equal(b.M, b.M.T)
    assert b.is_psd()
    for i, w in enumerate(wins):
        assert b.M[i, i] == pytest.approx(true_variance(FLICKER, w), rel=1e-10)


def test_build_sigma_white_decorrelates():
    f = [abs(build_sigma(white(1.0, 1e-4, wc), [W(0, 1)], 1.0).normalized().F[0]) for wc in (10, 100, 1000)]
    assert f[0] > f[1] > f[2]


def test_single_spur_low_rank():
    # a random-phase line has cos and sin quadratures, so the rank is 2, not 1
    s = PowerSpectrum(0.0, 0.0, 0.5, 10.0, (Spur(2.0, 1.0),))
    b = build_sigma(s, [W(0, 0.3), W(0.3, 1.1)], 1.7)
    assert abs(b.min_eigenvalue) < 1e-12 * np.trace(b.full)
    assert np.linalg.matrix_rank(b.full, tol=1e-10) == 2


def test_paper_coefficients_examples():
    assert np.allclose(predictor_coeffs_paper(blocks([[1.0]], [1.0]), 1.0), [1.0])
    b = blocks([[1.0, 0.3], [0.3, 1.0]], [0.8, 0.5])
    assert np.allclose(predictor_coeffs_paper(b, 0.0), 0.0)
    assert np.allclose(predictor_coeffs_paper(b, 2.0), 2 * predictor_coeffs_paper(b, 1.0))
    with pytest.raises(EstimatorError):
        predictor_coeffs_paper(blocks([[1.0]], [0.0]), 1.0)


def test_mmse_examples():
    f = np.array([0.3, -0.2, 0.1])
    assert np.allclose(predictor_coeffs_mmse(blocks(np.eye(3), f)), f)
    assert predictor_coeffs_mmse(blocks([[2.0]], [0.5]))[0] == pytest.approx(0.25)


def test_mmse_ridge_fallback():
    b = blocks([[1.0, 1.0], [1.0, 1.0]], [0.5, 0.5])
    with pytest.raises(EstimatorError) as exc:
        predictor_coeffs_mmse(b)
    assert np.all(np.isfinite(exc.value.fallback))
    assert np.allclose(predictor_coeffs_mmse(b, allow_ridge=True), exc.value.fallback)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10_000))
def test_mmse_is_optimal(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n + 1, n + 3))
    K = X @ X.T
    b = CovarianceBlocks(K[:n, :n], K[:n, n], K[n, n])
    c = predictor_coeffs_mmse(b, allow_ridge=True)
    mse = b.sigma_cc - b.F @ np.linalg.solve(b.M, b.F)
    assert -1e-9 * b.sigma_cc <= mse <= b.sigma_cc * (1 + 1e-12)
    best = accuracy_of_coefficients(b.normalized(), c)
    for _ in range(5):
        other = c + 0.1 * rng.normal(size=n)
        assert accuracy_of_coefficients(b.normalized(), other) <= best * (1 + 1e-9)


def test_accuracy_examples():
    b = blocks([[1.0, 0.2], [0.2, 1.0]], [0.5, 0.3])
    assert accuracy_analytic(b, 0.0) == pytest.approx(1.0)
    tiny = blocks([[1.0]], [1e-9])
    assert accuracy_analytic(tiny, 1.0) == pytest.approx(0.5, rel=1e-6)
    assert accuracy_analytic(blocks([[1.0]], [1.0]), 1.0) == pytest.approx(1.0)


def test_correlation_condition_examples():
    assert not correlation_condition(blocks([[1.0]], [0.0]), 1.0)
    assert not correlation_condition(blocks([[1.0]], [0.9]), 1.0)
    assert correlation_condition(blocks([[1.0]], [0.9]), 0.5)


def test_feedback_unrolls_to_difference():
    u = unroll_functionals(build_schedule(4, [1.0], 0.5), Feedback())
    for k in range(1, 4):
        row = np.zeros(u.samples.shape[1])
        row[k], row[k - 1] = 1.0, -1.0
        assert np.allclose(u.samples[k], row)


def test_free_run_identity():
    u = unroll_functionals(build_schedule(3, [0.5, 0.5], 0.2), FreeRun())
    assert np.array_equal(u.samples[:, :6], np.eye(6))
    assert not np.any(u.corrections)


def test_hff_fixed_coefficient_hand_unroll():
    c1 = 0.7
    u = unroll_functionals(build_schedule(2, [1.0], 0.0), HffBlock(1, coefficients=(c1,)))
    # C_1 = -c1 * y_1, so y_LLO_2 = y_LO_2 - c1 * y_LO_1
    assert np.allclose(u.samples[1][:2], [-c1, 1.0])
    assert np.allclose(u.corrections[0][:2], [-c1, 0.0])


def test_llo_covariance_bilinear():
    table = CovarianceTable(FLICKER)
    a, b, p = W(0, 1), W(1, 2), Point(2.5)
    fa = LinearFunctional(((a, 1.0), (b, -1.0)))
    fb = LinearFunctional(((p, 2.0),))
    expected = 2.0 * (table.cov(a, p) - table.cov(b, p))
    assert llo_covariance(table, fa, fb) == pytest.approx(expected, rel=1e-12)
    assert llo_covariance(FLICKER, fa, LinearFunctional(())) == 0.0


def test_moving_hff_warmup_and_psd():
    sched = build_schedule(5, [0.5], 0.5)
    u = unroll_functionals(sched, HffMoving(3, coeff_mode="mmse"), FLICKER)
    assert [r.warmup for r in u.rules] == [True, True, False, False, False]
    K = u.covariance(u.samples)
    assert np.linalg.eigvalsh(K).min() >= -1e-9 * np.trace(K)
