"""One-sided LO fractional-frequency noise spectra and their time-domain synthesis.

A :class:`PowerSpectrum` is a band-limited power law

    S_y(omega) = amplitude * (omega_ref / omega) ** exponent,   omega_low <= omega <= omega_cut

plus a list of delta-like spurs. Realizations are sums of cosines with
deterministic amplitudes, uniform random phases and, for continuum
components, a frequency drawn inside each grid bin with density
proportional to ``S_y``. The ensemble autocovariance of that construction is
exactly ``(1/2pi) * int S_y(omega) cos(omega * lag) d omega`` regardless of
how coarse the grid is; the grid only controls how Gaussian each single
realization looks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DomainError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Spur:
    """Narrowband line at ``omega`` (rad/s) carrying integrated power ``power``."""

    omega: float
    power: float

    def __post_init__(self):
        if not (self.omega > 0):
            raise DomainError(f"spur frequency must be positive, got {self.omega}")
        if not (self.power > 0):
            raise DomainError(f"spur power must be positive, got {self.power}")


@dataclass(frozen=True)
class PowerSpectrum:
    exponent: float
    amplitude: float
    omega_low: float
    omega_cut: float
    spurs: tuple[Spur, ...] = ()
    omega_ref: float | None = None

    def __post_init__(self):
        if not (0 < self.omega_low < self.omega_cut):
            raise DomainError(
                f"need 0 < omega_low < omega_cut, got {self.omega_low}, {self.omega_cut}"
            )
        if not (self.exponent >= 0):
            raise DomainError(f"exponent must be >= 0, got {self.exponent}")
        if not (self.amplitude >= 0) or not np.isfinite(self.amplitude):
            raise DomainError(f"amplitude must be finite and >= 0, got {self.amplitude}")
        object.__setattr__(self, "spurs", tuple(self.spurs))
        for s in self.spurs:
            if not (self.omega_low <= s.omega <= self.omega_cut):
                raise DomainError(f"spur at {s.omega} rad/s lies outside the band")
        if self.omega_ref is None:
            object.__setattr__(self, "omega_ref", self.omega_low)
        elif not (self.omega_ref > 0):
            raise DomainError("omega_ref must be positive")

    def scaled(self, factor: float) -> PowerSpectrum:
        """Continuum and spurs multiplied by ``factor``."""
        return replace(
            self,
            amplitude=self.amplitude * factor,
            spurs=tuple(Spur(s.omega, s.power * factor) for s in self.spurs),
        )

    @property
    def spur_power(self) -> float:
        return float(sum(s.power for s in self.spurs))


def white(level: float, omega_low: float, omega_cut: float) -> PowerSpectrum:
    return PowerSpectrum(0.0, level, omega_low, omega_cut)


def psd_eval(spectrum: PowerSpectrum, omega):
    """Continuum density at ``omega``; zero outside the band. Spurs are not included."""
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise DomainError("psd_eval requires omega > 0")
    inband = (w >= spectrum.omega_low) & (w <= spectrum.omega_cut)
    with np.errstate(divide="ignore"):
        val = spectrum.amplitude * (spectrum.omega_ref / w) ** spectrum.exponent
    out = np.where(inband, val, 0.0)
    return float(out) if out.ndim == 0 else out


def normalize_at(spectrum: PowerSpectrum, omega_ref: float, target: float) -> PowerSpectrum:
    """Rescale so that ``psd_eval(result, omega_ref) == target``."""
    if not (spectrum.omega_low <= omega_ref <= spectrum.omega_cut):
        raise DomainError(f"omega_ref={omega_ref} outside [{spectrum.omega_low}, {spectrum.omega_cut}]")
    if not (target > 0):
        raise DomainError("normalization target must be positive")
    return replace(spectrum, amplitude=float(target), omega_ref=float(omega_ref))


def _power_law_integral(exponent, a, b):
    """int_a^b omega**(-exponent) d omega, elementwise, for 0 < a <= b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = 1.0 - exponent
    if abs(p) < 1e-12:
        return np.log(b / a)
    # expm1 form keeps narrow bins accurate
    return a**p * np.expm1(p * np.log(b / a)) / p


def band_power(spectrum: PowerSpectrum, a, b):
    """Continuum power ``(1/2pi) int_a^b S_y`` with the limits clipped to the band."""
    lo = np.clip(a, spectrum.omega_low, spectrum.omega_cut)
    hi = np.clip(b, spectrum.omega_low, spectrum.omega_cut)
    scale = spectrum.amplitude * spectrum.omega_ref**spectrum.exponent / TWO_PI
    return scale * _power_law_integral(spectrum.exponent, lo, hi)


def continuum_power(spectrum: PowerSpectrum) -> float:
    return float(band_power(spectrum, spectrum.omega_low, spectrum.omega_cut))


def point_variance(spectrum: PowerSpectrum) -> float:
    """<y(t)^2> of the stationary process: continuum power plus spur powers."""
    return continuum_power(spectrum) + spectrum.spur_power


def spur_comb(
    omega_start: float, omega_step: float, count: int, total_power: float
) -> tuple[Spur, ...]:
    """``count`` equally spaced spurs sharing ``total_power`` equally."""
    if count < 1:
        raise ConfigurationError("spur count must be >= 1", field="spurs.count")
    return tuple(
        Spur(omega_start + i * omega_step, total_power / count) for i in range(count)
    )


def with_spur_fraction(
    spectrum: PowerSpectrum,
    omega_start: float,
    omega_step: float,
    count: int = 10,
    fraction: float = 0.1,
) -> PowerSpectrum:
    """Add a spur comb whose total power is ``fraction`` of the in-band continuum power."""
    spurs = spur_comb(omega_start, omega_step, count, fraction * continuum_power(spectrum))
    return replace(spectrum, spurs=tuple(spectrum.spurs) + spurs)


# -- synthesis ---------------------------------------------------------------


def frequency_grid(
    spectrum: PowerSpectrum,
    grid_points: int,
    omega_split: float | None = None,
    log_fraction: float = 0.25,
) -> np.ndarray:
    """Bin edges: logarithmic from omega_low to omega_split, linear above.

    Returns ``grid_points + 1`` edges spanning exactly [omega_low, omega_cut].
    """
    if grid_points < 2:
        raise ConfigurationError("grid_points must be >= 2", field="grid_points")
    lo, hi = spectrum.omega_low, spectrum.omega_cut
    if omega_split is None:
        omega_split = np.sqrt(lo * hi)
    omega_split = float(np.clip(omega_split, lo, hi))
    if omega_split <= lo * (1 + 1e-12):
        return np.linspace(lo, hi, grid_points + 1)
    if omega_split >= hi * (1 - 1e-12):
        return np.geomspace(lo, hi, grid_points + 1)
    n_log = max(1, int(round(log_fraction * grid_points)))
    n_lin = grid_points - n_log
    if n_lin < 1:
        raise ConfigurationError("grid too coarse for a linear band", field="grid_points")
    if np.log10(omega_split / lo) > n_log:
        raise ConfigurationError(
            "grid too coarse to cover [omega_low, omega_cut]: log bins wider than a decade",
            field="grid_points",
        )
    log_edges = np.geomspace(lo, omega_split, n_log + 1)
    lin_edges = np.linspace(omega_split, hi, n_lin + 1)
    return np.concatenate([log_edges, lin_edges[1:]])


def _draw_in_bins(exponent, a, b, u):
    """Inverse-CDF draw of omega with density proportional to omega**(-exponent) on [a, b]."""
    p = 1.0 - exponent
    if abs(p) < 1e-12:
        return a * np.exp(u * np.log(b / a))
    return a * np.exp(np.log1p(u * np.expm1(p * np.log(b / a))) / p)


@dataclass(frozen=True)
class NoiseRealization:
    """One free-running LO trajectory y(t) = sum_j A_j cos(omega_j t + phi_j)."""

    omegas: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    duration: float
    seed: object = None
    spectrum: PowerSpectrum | None = field(default=None, compare=False)

    @property
    def components(self):
        return list(zip(self.omegas.tolist(), self.amplitudes.tolist(), self.phases.tolist()))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        arg = np.multiply.outer(t, self.omegas) + self.phases
        return np.cos(arg) @ self.amplitudes

    def superpose(self, other: NoiseRealization, a: float = 1.0, b: float = 1.0) -> NoiseRealization:
        """Realization of ``a*self + b*other`` (components concatenated)."""
        return NoiseRealization(
            np.concatenate([self.omegas, other.omegas]),
            np.concatenate([a * self.amplitudes, b * other.amplitudes]),
            np.concatenate([self.phases, other.phases]),
            min(self.duration, other.duration),
            None,
            self.spectrum,
        )


def constant_realization(value: float, duration: float) -> NoiseRealization:
    """Static offset y(t) = value, as a single zero-frequency component."""
    return NoiseRealization(
        np.zeros(1), np.array([float(value)]), np.zeros(1), float(duration)
    )


@dataclass(frozen=True)
class NoiseEnsemble:
    """Realizations sharing one spectrum, stored as (realization, component) arrays.

    Row ``i`` is identical to ``synthesize(spectrum, duration, grid_points, seed=(seed, i))``.
    """

    omegas: np.ndarray  # (R, J)
    amplitudes: np.ndarray  # (J,)
    phases: np.ndarray  # (R, J)
    duration: float
    seed: int
    spectrum: PowerSpectrum
    first_index: int = 0

    @property
    def size(self) -> int:
        return self.omegas.shape[0]

    def realization(self, i: int) -> NoiseRealization:
        return NoiseRealization(
            self.omegas[i],
            self.amplitudes,
            self.phases[i],
            self.duration,
            (self.seed, self.first_index + i),
            self.spectrum,
        )


class _Synthesizer:
    """Grid bookkeeping shared by all realizations of one spectrum."""

    def __init__(self, spectrum, duration, grid_points, omega_split):
        if not (duration > 0):
            raise ConfigurationError("duration must be positive", field="duration")
        self.spectrum = spectrum
        edges = frequency_grid(spectrum, grid_points, omega_split)
        self.lo, self.hi = edges[:-1], edges[1:]
        powers = band_power(spectrum, self.lo, self.hi)
        spur_w = np.array([s.omega for s in spectrum.spurs], dtype=float)
        spur_a = np.sqrt(2.0 * np.array([s.power for s in spectrum.spurs], dtype=float))
        self.spur_omegas = spur_w
        self.amplitudes = np.concatenate([np.sqrt(2.0 * powers), spur_a])

    def draw(self, rng):
        n = self.lo.size
        u = rng.random(n)
        omegas = _draw_in_bins(self.spectrum.exponent, self.lo, self.hi, u)
        omegas = np.clip(omegas, self.lo, self.hi)
        phases = rng.random(n + self.spur_omegas.size) * TWO_PI
        return np.concatenate([omegas, self.spur_omegas]), phases


def _rng(seed):
    if isinstance(seed, (tuple, list)):
        return np.random.default_rng([int(s) for s in seed])
    return np.random.default_rng(seed)


def synthesize(
    spectrum: PowerSpectrum,
    duration: float,
    grid_points: int = 2000,
    seed=0,
    omega_split: float | None = None,
) -> NoiseRealization:
    """Draw one realization; a pure function of its arguments."""
    syn = _Synthesizer(spectrum, duration, grid_points, omega_split)
    omegas, phases = syn.draw(_rng(seed))
    return NoiseRealization(omegas, syn.amplitudes, phases, float(duration), seed, spectrum)


def synthesize_ensemble(
    spectrum: PowerSpectrum,
    duration: float,
    size: int,
    seed: int,
    grid_points: int = 2000,
    omega_split: float | None = None,
    first_index: int = 0,
) -> NoiseEnsemble:
    """Realizations ``first_index .. first_index+size-1`` of master seed ``seed``."""
    if size < 1:
        raise ConfigurationError("ensemble size must be >= 1", field="ensemble.size")
    syn = _Synthesizer(spectrum, duration, grid_points, omega_split)
    n = syn.amplitudes.size
    omegas = np.empty((size, n))
    phases = np.empty((size, n))
    for i in range(size):
        omegas[i], phases[i] = syn.draw(_rng((seed, first_index + i)))
    return NoiseEnsemble(omegas, syn.amplitudes, phases, float(duration), seed, spectrum, first_index)
