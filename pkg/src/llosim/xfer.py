"""Frequency-domain transfer functions and the overlap-integral quadrature.

Every second moment of flat-top samples and point values reduces to

    Cov(a, b) = (1/2pi) int S_y(omega) cos(omega * delta) sinc(omega T_a / 2) sinc(omega T_b / 2) d omega

with ``delta`` the distance between window midpoints and ``T = 0`` for a point
value. That product is algebraically identical to the four-cosine pair
kernel; the product form has no cancellation as omega -> 0, so no series
branch is needed there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import QuadratureError
from .ramsey import MeasurementWindow, mean_sensitivity
from .spectra import TWO_PI, PowerSpectrum, psd_eval

# Gauss-Kronrod 7/15 rule on [-1, 1] (QUADPACK qk15 constants).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_gauss_half = np.zeros(8)
_gauss_half[1::2] = _WG
_GAUSS = np.concatenate([_gauss_half[:-1], _gauss_half[::-1]])


def _sinc(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)


# -- closed-form kernels -----------------------------------------------------


def single_tf(omega, T_R):
    """(sin(omega T/2) / (omega T/2))**2."""
    return _sinc(0.5 * np.asarray(omega) * T_R) ** 2


def _pair_kernel(omega, delta, ta, tb):
    w = np.asarray(omega, dtype=float)
    # grouped so that swapping the windows is exact in floating point
    return np.cos(w * np.abs(delta)) * (_sinc(0.5 * w * ta) * _sinc(0.5 * w * tb))


def pair_tf(omega, wk: MeasurementWindow, wl: MeasurementWindow):
    """Pair covariance transfer function of two flat-top windows."""
    lv = mean_sensitivity(wk) * mean_sensitivity(wl)
    return lv * _pair_kernel(omega, wl.midpoint - wk.midpoint, wk.duration, wl.duration)


def pair_tf_four_cosine(omega, wk: MeasurementWindow, wl: MeasurementWindow):
    """The same kernel written as four cosines over omega**2 T_k T_l (cancels as omega -> 0)."""
    w = np.asarray(omega, dtype=float)
    num = (
        np.cos(w * (wl.t_start - wk.t_start))
        + np.cos(w * (wl.t_end - wk.t_end))
        - np.cos(w * (wl.t_end - wk.t_start))
        - np.cos(w * (wl.t_start - wk.t_end))
    )
    return num / (w * w * wk.duration * wl.duration)


def point_pair_tf(omega, wk: MeasurementWindow, t_c: float):
    """Zero-duration limit of ``pair_tf`` for a point value at ``t_c``."""
    return mean_sensitivity(wk) * _pair_kernel(omega, t_c - wk.midpoint, wk.duration, 0.0)


def allan_tf(omega, T_R):
    """2 sin^4(omega T/2) / (omega T/2)^2."""
    x = 0.5 * np.asarray(omega, dtype=float) * T_R
    return 2.0 * np.sin(x) ** 4 / (x * x)


# -- transfer-function objects ----------------------------------------------


@dataclass(frozen=True)
class TransferFunction:
    """An evaluable kernel plus, when available, its decomposition into pair terms.

    ``terms`` holds tuples ``(coefficient, delta, T_a, T_b)``; the kernel is
    ``sum coefficient * cos(omega delta) sinc(omega T_a/2) sinc(omega T_b/2)``.
    """

    kind: str
    terms: tuple = ()
    func: Callable | None = field(default=None, compare=False)
    t_max: float = 0.0
    tail_coef: float = np.inf

    def __call__(self, omega):
        if self.func is not None:
            return self.func(omega)
        w = np.asarray(omega, dtype=float)
        out = np.zeros_like(w)
        for c, d, ta, tb in self.terms:
            out = out + c * _pair_kernel(w, d, ta, tb)
        return out


def _pair_terms_tf(kind, terms):
    t_max = max(abs(d) + 0.5 * (ta + tb) for _, d, ta, tb in terms)
    tail = np.inf
    if all(ta > 0 and tb > 0 for _, _, ta, tb in terms):
        tail = sum(abs(c) * 4.0 / (ta * tb) for c, _, ta, tb in terms)
    return TransferFunction(kind, tuple(terms), None, t_max, tail)


def SingleSinc2(T_R: float) -> TransferFunction:
    return _pair_terms_tf("single", [(1.0, 0.0, T_R, T_R)])


def Pair(wk: MeasurementWindow, wl: MeasurementWindow) -> TransferFunction:
    lv = mean_sensitivity(wk) * mean_sensitivity(wl)
    return _pair_terms_tf("pair", [(lv, wl.midpoint - wk.midpoint, wk.duration, wl.duration)])


def PointPair(wk: MeasurementWindow, t_c: float) -> TransferFunction:
    return _pair_terms_tf("point_pair", [(mean_sensitivity(wk), t_c - wk.midpoint, wk.duration, 0.0)])


def PointPoint(t_a: float = 0.0, t_b: float = 0.0) -> TransferFunction:
    return _pair_terms_tf("point_point", [(1.0, t_b - t_a, 0.0, 0.0)])


def Allan(T_R: float) -> TransferFunction:
    return TransferFunction("allan", (), lambda w: allan_tf(w, T_R), 1.5 * T_R, 8.0 / T_R**2)


# -- quadrature ------------------------------------------------------------------


@dataclass(frozen=True)
class OverlapResult:
    """Overlap integral with its quadrature error estimate and truncation bound.

    ``tail_bound`` is S_y(omega_cut) * (1/2pi) * int_{omega_cut}^inf |tf|, i.e. what
    a spectrum continued flat past the cutoff would add.
    """

    value: float
    error: float
    tail_bound: float

    def __float__(self):
        return self.value


def _panel_edges(lo, hi, t_max, level):
    ratio = 1.0 + 0.5 / 2**level
    h = np.inf if t_max <= 0 else np.pi / (4.0 * t_max) / 2**level
    w_star = min(hi, max(lo, h / (ratio - 1.0)))
    if w_star <= lo:
        geo = np.array([lo])
    else:
        n_geo = max(1, int(np.ceil(np.log(w_star / lo) / np.log(ratio))))
        geo = np.geomspace(lo, w_star, n_geo + 1)
    if w_star < hi:
        n_lin = max(1, int(np.ceil((hi - w_star) / h)))
        lin = np.linspace(w_star, hi, n_lin + 1)
        return np.concatenate([geo, lin[1:]])
    return geo


def _nodes(spectrum, t_max, level):
    edges = _panel_edges(spectrum.omega_low, spectrum.omega_cut, t_max, level)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    omega = mid[:, None] + half[:, None] * _NODES[None, :]
    dens = psd_eval(spectrum, omega) * (half[:, None] / TWO_PI)
    return omega, dens * _KRONROD, dens * _GAUSS


def _tmax_bucket(t):
    if t <= 0:
        return 0.0
    return 2.0 ** np.ceil(np.log2(t))


def pair_integrals(
    spectrum: PowerSpectrum,
    deltas,
    tas,
    tbs,
    rtol: float = 1e-6,
    max_level: int = 6,
) -> tuple[np.ndarray, np.ndarray]:
    """Continuum integrals of many pair kernels plus exact spur masses.

    Returns ``(values, errors)``. Pairs are grouped by the panel width their
    largest time argument requires so short lags do not pay for long ones.
    """
    deltas = np.abs(np.asarray(deltas, dtype=float))
    tas = np.asarray(tas, dtype=float)
    tbs = np.asarray(tbs, dtype=float)
    values = np.zeros(deltas.size)
    errors = np.zeros(deltas.size)
    if spectrum.amplitude > 0:
        t_max = deltas + 0.5 * (tas + tbs)
        buckets = np.array([_tmax_bucket(t) for t in t_max])
        for b in np.unique(buckets):
            todo = np.flatnonzero(buckets == b)
            level = 0
            while todo.size:
                omega, wk, wg = _nodes(spectrum, b, level)
                res = kernels.overlap_sums(omega, wk, wg, deltas[todo], tas[todo], tbs[todo])
                values[todo] = res[:, 0]
                errors[todo] = res[:, 1]
                bad = res[:, 1] > rtol * res[:, 2] + 1e-300
                if not bad.any():
                    break
                if level == max_level:
                    i = todo[bad][0]
                    raise QuadratureError(
                        "overlap quadrature did not converge", values[i], errors[i]
                    )
                todo = todo[bad]
                level += 1
    for s in spectrum.spurs:
        values += s.power * _pair_kernel(s.omega, deltas, tas, tbs)
    return values, errors


def overlap_integral(spectrum: PowerSpectrum, tf: TransferFunction, rtol: float = 1e-6) -> OverlapResult:
    """(1/2pi) int_{omega_low}^{omega_cut} S_y tf d omega + sum over spurs of power * tf(omega_s)."""
    tail = float(psd_eval(spectrum, spectrum.omega_cut)) * tf.tail_coef / (TWO_PI * spectrum.omega_cut)
    if tf.terms:
        coef = np.array([t[0] for t in tf.terms])
        vals, errs = pair_integrals(
            spectrum, [t[1] for t in tf.terms], [t[2] for t in tf.terms], [t[3] for t in tf.terms], rtol
        )
        return OverlapResult(float(coef @ vals), float(np.abs(coef) @ errs), tail)
    return _generic_overlap(spectrum, tf, rtol, tail)


def _generic_overlap(spectrum, tf, rtol, tail, max_level=6):
    value = 0.0
    err = 0.0
    if spectrum.amplitude > 0:
        for level in range(max_level + 1):
            omega, wk, wg = _nodes(spectrum, tf.t_max, level)
            f = tf(omega)
            kp = (f * wk).sum(axis=1)
            gp = (f * wg).sum(axis=1)
            value, err = float(kp.sum()), float(np.abs(kp - gp).sum())
            if err <= rtol * np.abs(kp).sum() + 1e-300:
                break
        else:
            raise QuadratureError("overlap quadrature did not converge", value, err)
    for s in spectrum.spurs:
        value += s.power * float(tf(s.omega))
    return OverlapResult(value, err, tail)


def covariance_of_windows(spectrum: PowerSpectrum, wk: MeasurementWindow, wl: MeasurementWindow) -> float:
    return overlap_integral(spectrum, Pair(wk, wl)).value


def true_variance(spectrum: PowerSpectrum, window: MeasurementWindow) -> float:
    return covariance_of_windows(spectrum, window, window)


# -- raw-quantity covariance cache ---------------------------------------------


@dataclass(frozen=True)
class Point:
    """Instantaneous value y(t) at time ``t`` (a zero-duration sample)."""

    t: float

    @property
    def midpoint(self) -> float:
        return self.t

    @property
    def duration(self) -> float:
        return 0.0


def _geometry(item):
    if isinstance(item, Point):
        return item.t, 0.0, 1.0
    return item.midpoint, item.duration, mean_sensitivity(item)


class CovarianceTable:
    """Pairwise covariances of windows and point values for one spectrum.

    Results are cached by (|midpoint lag|, sorted durations), so periodic
    schedules only integrate each distinct lag once.
    """

    def __init__(self, spectrum: PowerSpectrum, rtol: float = 1e-6, digits: int = 12):
        self.spectrum = spectrum
        self.rtol = rtol
        self.digits = digits
        self._cache: dict[tuple, float] = {}

    def _key(self, d, ta, tb):
        r = self.digits
        return (round(abs(d), r), round(min(ta, tb), r), round(max(ta, tb), r))

    def matrix(self, items: Sequence, others: Sequence | None = None) -> np.ndarray:
        """Covariance matrix between ``items`` and ``others`` (default: items)."""
        others = items if others is None else others
        ga = [_geometry(x) for x in items]
        gb = [_geometry(x) for x in others]
        keys = {}
        for i, (ma, ta, _) in enumerate(ga):
            for j, (mb, tb, _) in enumerate(gb):
                keys[(i, j)] = self._key(mb - ma, ta, tb)
        missing = sorted({k for k in keys.values() if k not in self._cache})
        if missing:
            arr = np.array(missing)
            vals, _ = pair_integrals(self.spectrum, arr[:, 0], arr[:, 1], arr[:, 2], self.rtol)
            self._cache.update(zip(missing, vals.tolist()))
        out = np.empty((len(ga), len(gb)))
        for (i, j), k in keys.items():
            out[i, j] = self._cache[k] * ga[i][2] * gb[j][2]
        return out

    def cov(self, a, b) -> float:
        return float(self.matrix([a], [b])[0, 0])
