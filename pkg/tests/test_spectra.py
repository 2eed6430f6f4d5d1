import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from llosim.errors import DomainError
from llosim.spectra import (
    TWO_PI,
    PowerSpectrum,
    Spur,
    normalize_at,
    point_variance,
    psd_eval,
    synthesize,
    synthesize_ensemble,
    white,
)


def flicker(amplitude=1.0, lo=0.1, hi=100.0, spurs=()):
    return PowerSpectrum(1.0, amplitude, lo, hi, spurs)


def test_psd_white_constant():
    s = white(2.5, 0.1, 10.0)
    assert psd_eval(s, 3.0) == pytest.approx(2.5)


def test_psd_power_law_scaling():
    s = flicker()
    assert psd_eval(s, 2.0) / psd_eval(s, 1.0) == pytest.approx(0.5)


def test_psd_zero_outside_band():
    s = flicker()
    assert psd_eval(s, 200.0) == 0.0
    assert psd_eval(s, 0.01) == 0.0


@pytest.mark.parametrize("bad", [(0.0, 1.0), (2.0, 1.0), (-1.0, 1.0)])
def test_band_validation(bad):
    with pytest.raises(DomainError):
        PowerSpectrum(1.0, 1.0, *bad)


def test_spur_outside_band_rejected():
    with pytest.raises(DomainError):
        flicker(spurs=(Spur(500.0, 1.0),))


def test_normalize_at_two_exponents():
    ref = TWO_PI / 100
    for alpha in (1.0, 0.5):
        s = normalize_at(PowerSpectrum(alpha, 7.0, ref, 100.0), ref, 3.0)
        assert psd_eval(s, ref) == pytest.approx(3.0)
        again = normalize_at(s, ref, 3.0)
        assert again.amplitude == pytest.approx(s.amplitude)
        doubled = normalize_at(s, ref, 6.0)
        for w in (0.1, 1.0, 10.0):
            assert psd_eval(doubled, w) == pytest.approx(2 * psd_eval(s, w))


def test_point_variance_white():
    s = white(2.0, 1e-9, 50.0)
    assert point_variance(s) == pytest.approx(2.0 * 50.0 / TWO_PI, rel=1e-8)


def test_point_variance_spurs_only():
    s = PowerSpectrum(0.0, 0.0, 1.0, 10.0, (Spur(2.0, 0.3), Spur(5.0, 0.7)))
    assert point_variance(s) == pytest.approx(1.0)


def test_point_variance_flicker_closed_form():
    lo, hi = 0.2, 300.0
    s = normalize_at(flicker(lo=lo, hi=hi), lo, 1.5)
    closed = 1.5 * lo / TWO_PI * np.log(hi / lo)
    quad, _ = integrate.quad(lambda w: psd_eval(s, w), lo, hi, limit=200)
    assert point_variance(s) == pytest.approx(closed, rel=1e-10)
    assert point_variance(s) == pytest.approx(quad / TWO_PI, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.01, 1.0), st.floats(2.0, 1e3))
def test_point_variance_matches_quadrature(alpha, lo, hi):
    s = PowerSpectrum(alpha, 1.0, lo, hi)
    quad, _ = integrate.quad(lambda w: psd_eval(s, w), lo, hi, limit=400, points=[1.0])
    assert point_variance(s) == pytest.approx(quad / TWO_PI, rel=1e-6)


def test_synthesize_single_spur_is_cosine():
    s = PowerSpectrum(0.0, 0.0, 1.0, 10.0, (Spur(3.0, 0.4),))
    r = synthesize(s, 1000.0, grid_points=10, seed=1)
    t = np.linspace(0, 1000.0, 200001)
    assert np.mean(r(t) ** 2) == pytest.approx(0.4, rel=0.01)


def test_synthesize_zero_spectrum():
    s = PowerSpectrum(1.0, 0.0, 1.0, 10.0)
    r = synthesize(s, 5.0, grid_points=50, seed=3)
    assert np.all(r(np.linspace(0, 5, 11)) == 0.0)


def test_synthesize_deterministic_and_seed_sensitive():
    s = flicker()
    a, b = synthesize(s, 10.0, 200, seed=(4, 2)), synthesize(s, 10.0, 200, seed=(4, 2))
    c = synthesize(s, 10.0, 200, seed=(4, 3))
    t = np.linspace(0, 10, 7)
    assert np.array_equal(a(t), b(t))
    assert not np.allclose(a(t), c(t))


def test_ensemble_row_matches_single_draw():
    s = flicker()
    ens = synthesize_ensemble(s, 10.0, 5, seed=9, grid_points=100, first_index=3)
    one = synthesize(s, 10.0, 100, seed=(9, 4))
    t = np.linspace(0, 10, 5)
    assert np.allclose(ens.realization(1)(t), one(t), rtol=0, atol=1e-14)


def test_white_variance_and_zero_mean():
    s = white(1.0, 1e-3, 20.0)
    ens = synthesize_ensemble(s, 10.0, 4000, seed=11, grid_points=400)
    y = np.array([ens.realization(i)([0.0, 5.0]) for i in range(ens.size)])
    target = point_variance(s)
    for col in y.T:
        v = col**2
        assert abs(v.mean() - target) < 3 * v.std(ddof=1) / np.sqrt(v.size)
        assert abs(col.mean()) < 3 * col.std(ddof=1) / np.sqrt(col.size)


def test_autocovariance_matches_wiener_khinchin():
    s = flicker(lo=0.05, hi=20.0, spurs=(Spur(3.0, 0.2),))
    lag = 0.7
    ens = synthesize_ensemble(s, 5.0, 4000, seed=12, grid_points=400)
    prod = np.array([np.prod(ens.realization(i)([1.0, 1.0 + lag])) for i in range(ens.size)])
    quad, _ = integrate.quad(lambda w: psd_eval(s, w) * np.cos(w * lag), 0.05, 20.0, limit=400)
    expected = quad / TWO_PI + 0.2 * np.cos(3.0 * lag)
    assert abs(prod.mean() - expected) < 3 * prod.std(ddof=1) / np.sqrt(prod.size)
