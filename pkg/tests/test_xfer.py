import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llosim.ramsey import MeasurementWindow
from llosim.spectra import PowerSpectrum, Spur, point_variance, white
from llosim.xfer import (
    CovarianceTable,
    Pair,
    PointPoint,
    SingleSinc2,
    allan_tf,
    covariance_of_windows,
    overlap_integral,
    pair_tf,
    pair_tf_four_cosine,
    point_pair_tf,
    single_tf,
    true_variance,
)

W = MeasurementWindow


def test_single_tf_values():
    assert single_tf(1e-9, 1.0) == pytest.approx(1.0)
    assert abs(single_tf(2 * np.pi, 1.0)) < 1e-15
    assert single_tf(np.pi, 1.0) == pytest.approx((2 / np.pi) ** 2, rel=1e-12)


def test_pair_tf_examples():
    w = np.linspace(0.01, 30, 50)
    assert np.allclose(pair_tf(w, W(2, 3.5), W(2, 3.5)), single_tf(w, 1.5), rtol=1e-10)
    assert pair_tf(1e-7, W(0, 1), W(3, 5)) == pytest.approx(1.0, rel=1e-9)
    assert abs(pair_tf(2 * np.pi, W(0, 1), W(10, 11))) < 1e-12


def test_point_pair_tf_examples():
    assert point_pair_tf(1e-7, W(0, 2), 1.0) == pytest.approx(1.0, rel=1e-9)
    assert abs(point_pair_tf(np.pi, W(0, 1), 1.0)) < 1e-15
    w = np.linspace(0.1, 20, 40)
    thin = W(4.0, 4.0 + 1e-6)
    err = np.abs(pair_tf(w, W(0, 1.5), thin) - point_pair_tf(w, W(0, 1.5), 4.0))
    assert err.max() < 1e-4 * np.abs(point_pair_tf(w, W(0, 1.5), 4.0)).max()


def test_allan_tf_values():
    assert allan_tf(1e-6, 1.0) < 1e-10
    assert allan_tf(np.pi, 1.0) == pytest.approx(8 / np.pi**2, rel=1e-12)
    assert abs(allan_tf(2 * np.pi, 1.0)) < 1e-15


windows = st.tuples(st.floats(0, 10), st.floats(0.05, 3)).map(lambda p: W(p[0], p[0] + p[1]))


@settings(max_examples=60, deadline=None)
@given(windows, windows, st.floats(0.01, 40), st.floats(-5, 5))
def test_pair_tf_symmetry_translation_and_series(a, b, omega, shift):
    v = pair_tf(omega, a, b)
    assert v == pair_tf(omega, b, a)
    assert v == pytest.approx(pair_tf(omega, a.shifted(shift), b.shifted(shift)), rel=1e-7, abs=1e-9)
    assert v == pytest.approx(pair_tf_four_cosine(omega, a, b), rel=1e-6, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(windows, windows, st.floats(0.01, 40))
def test_sum_difference_identity(a, b, omega):
    def g(win):  # Fourier transform of the unit-area rectangle
        return (np.exp(1j * omega * win.t_end) - np.exp(1j * omega * win.t_start)) / (1j * omega * win.duration)

    gp, gm = g(a) + g(b), g(a) - g(b)
    expected = 0.25 * (abs(gp) ** 2 - abs(gm) ** 2)
    assert pair_tf(omega, a, b) == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_pair_tf_bound():
    w = np.linspace(0.5, 200, 500)
    a, b = W(0, 1.0), W(3, 3.5)
    v = np.abs(pair_tf(w, a, b))
    assert np.all(v <= 4 / (w**2 * 1.0 * 0.5) + 1e-12)


def test_overlap_white_sinc():
    T = 1.0
    s = white(1.0, 1e-6, 2000.0)
    assert overlap_integral(s, SingleSinc2(T)).value == pytest.approx(1.0 / (2 * T), rel=0.01)


def test_overlap_spurs_and_point():
    spurs = (Spur(1.0, 0.5), Spur(4.0, 0.25))
    s = PowerSpectrum(0.0, 0.0, 0.5, 10.0, spurs)
    expected = 0.5 * single_tf(1.0, 2.0) + 0.25 * single_tf(4.0, 2.0)
    assert overlap_integral(s, SingleSinc2(2.0)).value == pytest.approx(expected, rel=1e-12)
    f = PowerSpectrum(1.0, 1.0, 0.1, 100.0, spurs)
    assert overlap_integral(f, PointPoint()).value == pytest.approx(point_variance(f), rel=1e-8)


def test_covariance_self_pair_equals_single():
    s = PowerSpectrum(1.0, 1.0, 0.05, 200.0)
    w = W(0, 1.3)
    assert covariance_of_windows(s, w, w) == pytest.approx(overlap_integral(s, SingleSinc2(1.3)).value, rel=1e-8)
    assert true_variance(s, w) == pytest.approx(covariance_of_windows(s, w, w), rel=1e-12)


def test_white_disjoint_decorrelates():
    vals = [abs(covariance_of_windows(white(1.0, 1e-4, wc), W(0, 1), W(1, 2))) for wc in (10, 100, 1000)]
    assert vals[0] > vals[1] > vals[2]


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0])
def test_gram_matrix_psd(alpha):
    s = PowerSpectrum(alpha, 1.0, 0.05, 100.0, (Spur(2.0, 0.1),))
    wins = [W(0, 0.3), W(0.3, 1.0), W(2.0, 2.2), W(2.2, 4.0), W(7.0, 7.5)]
    K = CovarianceTable(s).matrix(wins)
    assert np.linalg.eigvalsh(K).min() >= -1e-9 * np.trace(K)


def test_table_matches_direct():
    s = PowerSpectrum(2.0, 1.0, 0.05, 100.0)
    a, b = W(0.0, 1.0), W(1.5, 2.0)
    assert CovarianceTable(s).cov(a, b) == pytest.approx(overlap_integral(s, Pair(a, b)).value, rel=1e-7)
