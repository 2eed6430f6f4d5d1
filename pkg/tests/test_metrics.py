import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from llosim.control import plan, simulate
from llosim.controllers import Feedback, FreeRun, HffMoving
from llosim.errors import ConfigurationError, DomainError
from llosim.metrics import (
    allan_variance_fd,
    allan_variance_td,
    ensemble_metric,
    expected_sample_variance_curve,
    expected_sample_variance_from_cov,
    expected_sample_variance_llo,
    llo_allan_variance,
    llo_true_variance,
    prefix_sample_variance,
    sample_variance,
    trace_metric,
)
from llosim.ramsey import MeasurementWindow, build_schedule, duty_schedule
from llosim.spectra import PowerSpectrum
from llosim.xfer import CovarianceTable, covariance_of_windows

FLICKER = PowerSpectrum(1.0, 1.0, 0.05, 100.0)


def test_sample_variance_examples():
    assert sample_variance([1.0, 2.0, 3.0]) == pytest.approx(1.0)
    assert sample_variance([4.0, 4.0]) == 0.0
    with pytest.raises(DomainError):
        sample_variance([1.0])


def test_allan_variance_examples():
    assert allan_variance_td([0.0, 1.0, 0.0, 1.0]) == pytest.approx(0.5)
    assert allan_variance_td([2.0, 2.0, 2.0]) == 0.0
    with pytest.raises(DomainError):
        allan_variance_td([1.0])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(2, 40), elements=finite))
def test_prefix_matches_direct(y):
    pre = prefix_sample_variance(y)
    for N in range(2, y.size + 1):
        assert pre[N - 2] == pytest.approx(np.var(y[:N], ddof=1), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(2, 30), elements=finite), finite)
def test_shift_invariance(y, c):
    assert sample_variance(y + c) == pytest.approx(sample_variance(y), rel=1e-7, abs=1e-6)
    assert allan_variance_td(y + c) == pytest.approx(allan_variance_td(y), rel=1e-7, abs=1e-6)


def test_allan_fd_matches_window_covariances():
    T = 0.7
    a, b = MeasurementWindow(0, T), MeasurementWindow(T, 2 * T)
    direct = covariance_of_windows(FLICKER, a, a) - covariance_of_windows(FLICKER, a, b)
    assert allan_variance_fd(FLICKER, T) == pytest.approx(direct, rel=1e-6)


def test_expected_from_cov_white_identity():
    K = 2.0 * np.eye(5)
    assert expected_sample_variance_from_cov(K) == pytest.approx(2.0)
    assert expected_sample_variance_from_cov(np.ones((4, 4))) == pytest.approx(0.0)


def test_curve_matches_pointwise():
    sched = duty_schedule(6, 1.0, 0.5)
    table = CovarianceTable(FLICKER)
    u = plan(sched, HffMoving(2, coeff_mode="mmse"), FLICKER)
    curve = expected_sample_variance_curve(u)
    for N in (2, 4, 6):
        v = expected_sample_variance_llo(FLICKER, sched, HffMoving(2, coeff_mode="mmse"), N=N, table=table)
        assert curve[N - 2] == pytest.approx(v, rel=1e-10)


def test_llo_variances_feedback():
    sched = duty_schedule(4, 1.0, 1.0)
    u = plan(sched, Feedback())
    u.table = CovarianceTable(FLICKER)
    w = sched.windows
    # y_LLO_1 = y_1 - y_0
    v = covariance_of_windows(FLICKER, w[1], w[1]) + covariance_of_windows(FLICKER, w[0], w[0]) - 2 * covariance_of_windows(FLICKER, w[0], w[1])
    assert llo_true_variance(u, 1) == pytest.approx(v, rel=1e-8)
    assert llo_allan_variance(u, 1) >= 0


def test_monte_carlo_matches_expectation():
    sched = duty_schedule(10, 1.0, 0.5)
    stat = ensemble_metric(FLICKER, sched, Feedback(), ensemble_size=3000, seed=3, grid_points=500)
    exact = expected_sample_variance_llo(FLICKER, sched, Feedback())
    assert abs(stat.mean - exact) < 3 * stat.std_error


def test_metric_validation():
    sched = duty_schedule(3, 1.0, 0.5)
    (t,) = simulate(FLICKER, sched, [FreeRun()], 3, seed=0, grid_points=50)
    assert trace_metric(t, "allan_variance").shape == (3,)
    with pytest.raises(ConfigurationError):
        trace_metric(t, "hadamard")
    with pytest.raises(ConfigurationError):
        ensemble_metric(FLICKER, sched, FreeRun(), "allan_variance", 10, curve=True)
