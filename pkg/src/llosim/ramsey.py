"""Ramsey measurement windows, cycle schedules and integrated samples."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, DomainError
from .spectra import NoiseEnsemble, NoiseRealization


@dataclass(frozen=True)
class Sensitivity:
    """Flat-top sensitivity g(t) = level on [0, T_R].

    ``level == 1`` is the ideal rectangular window of zero-duration pulses.
    Other levels only exist to exercise the mean-sensitivity bookkeeping.
    """

    level: float = 1.0

    @property
    def tag(self) -> str:
        return "rectangular"


RECTANGULAR = Sensitivity()


@dataclass(frozen=True)
class MeasurementWindow:
    t_start: float
    t_end: float
    sensitivity: Sensitivity = RECTANGULAR

    def __post_init__(self):
        if not (self.t_end > self.t_start):
            raise DomainError(f"window needs t_end > t_start, got [{self.t_start}, {self.t_end}]")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.t_start + self.t_end)

    def shifted(self, dt: float) -> MeasurementWindow:
        return MeasurementWindow(self.t_start + dt, self.t_end + dt, self.sensitivity)


def mean_sensitivity(window: MeasurementWindow) -> float:
    """g-bar = (1/T_R) int_0^T_R g(t) dt."""
    return window.sensitivity.level


@dataclass(frozen=True)
class Cycle:
    windows: tuple[MeasurementWindow, ...]
    correction_time: float


@dataclass(frozen=True)
class CycleSchedule:
    cycles: tuple[Cycle, ...]

    def __post_init__(self):
        object.__setattr__(self, "cycles", tuple(self.cycles))
        last = -np.inf
        for i, cyc in enumerate(self.cycles):
            if not cyc.windows:
                raise ConfigurationError(f"cycle {i} has no windows", field="schedule")
            for w in cyc.windows:
                if w.t_start < last - 1e-12:
                    raise ConfigurationError(
                        f"windows overlap or are out of order in cycle {i}", field="schedule"
                    )
                last = w.t_end
            if cyc.correction_time < last - 1e-12:
                raise ConfigurationError(
                    f"correction of cycle {i} precedes its last window", field="schedule"
                )
            last = cyc.correction_time

    @property
    def windows(self) -> list[MeasurementWindow]:
        return [w for c in self.cycles for w in c.windows]

    @property
    def correction_times(self) -> np.ndarray:
        return np.array([c.correction_time for c in self.cycles])

    @property
    def end(self) -> float:
        return self.cycles[-1].correction_time

    @property
    def windows_per_cycle(self) -> list[int]:
        return [len(c.windows) for c in self.cycles]

    def cycle_of_window(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.cycles)), self.windows_per_cycle)

    @property
    def duty_factor(self) -> float:
        """Interrogation time over total time of the first cycle."""
        c0 = self.cycles[0]
        start = c0.windows[0].t_start
        return sum(w.duration for w in c0.windows) / (c0.correction_time - start)


def build_schedule(
    n_cycles: int,
    ramsey_durations: float | Sequence[float],
    dead_time: float,
    correction_at: str = "cycle_end",
    t0: float = 0.0,
) -> CycleSchedule:
    """Pack ``ramsey_durations`` back to back in every cycle, then append the dead time.

    The correction of each cycle is applied at the end of its dead time.
    """
    if n_cycles < 1:
        raise ConfigurationError("n_cycles must be >= 1", field="schedule.n_cycles")
    durations = np.atleast_1d(np.asarray(ramsey_durations, dtype=float))
    if durations.size == 0 or np.any(~(durations > 0)):
        raise ConfigurationError("Ramsey durations must be positive", field="schedule.ramsey")
    if not (dead_time >= 0):
        raise ConfigurationError("dead time must be >= 0", field="schedule.dead_time")
    if correction_at != "cycle_end":
        raise ConfigurationError(
            f"unsupported correction placement {correction_at!r}", field="schedule.correction_at"
        )
    cycles = []
    t = float(t0)
    for _ in range(n_cycles):
        wins = []
        for d in durations:
            wins.append(MeasurementWindow(t, t + d))
            t += d
        t += dead_time
        cycles.append(Cycle(tuple(wins), t))
    return CycleSchedule(tuple(cycles))


def duty_schedule(n_cycles: int, cycle_time: float, duty_factor: float, n_windows: int = 1) -> CycleSchedule:
    """Uniform schedule with ``n_windows`` equal windows filling ``duty_factor`` of each cycle."""
    if not (0 < duty_factor <= 1):
        raise ConfigurationError(
            f"duty factor must lie in (0, 1], got {duty_factor}", field="schedule.duty_factor"
        )
    t_r = duty_factor * cycle_time
    return build_schedule(n_cycles, [t_r / n_windows] * n_windows, cycle_time - t_r)


def _check_inside(windows, duration):
    for w in windows:
        if w.t_start < -1e-12 or w.t_end > duration + 1e-9:
            raise DomainError(f"window [{w.t_start}, {w.t_end}] outside realization [0, {duration}]")


def sample_windows_ensemble(ensemble: NoiseEnsemble, windows: Sequence[MeasurementWindow]) -> np.ndarray:
    """(R, K) integrated samples of every realization over every window."""
    _check_inside(windows, ensemble.duration)
    centers = np.array([w.midpoint for w in windows])
    half = np.array([0.5 * w.duration for w in windows])
    levels = np.array([mean_sensitivity(w) for w in windows])
    return kernels.window_means(ensemble.omegas, ensemble.phases, ensemble.amplitudes, centers, half) * levels


def point_values_ensemble(ensemble: NoiseEnsemble, times) -> np.ndarray:
    """(R, K) instantaneous values y(t)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < -1e-12) or np.any(times > ensemble.duration + 1e-9):
        raise DomainError("evaluation time outside realization")
    return kernels.window_means(
        ensemble.omegas, ensemble.phases, ensemble.amplitudes, times, np.zeros_like(times)
    )


def _as_ensemble(realization: NoiseRealization) -> NoiseEnsemble:
    return NoiseEnsemble(
        realization.omegas[None, :],
        realization.amplitudes,
        realization.phases[None, :],
        realization.duration,
        0,
        realization.spectrum,
    )


def sample_window(realization: NoiseRealization, window: MeasurementWindow) -> float:
    """(1/T_R) int y(t) g(t - t_s) dt, in closed form per cosine component."""
    return float(sample_windows_ensemble(_as_ensemble(realization), [window])[0, 0])


def sample_windows(realization: NoiseRealization, windows: Sequence[MeasurementWindow]) -> np.ndarray:
    return sample_windows_ensemble(_as_ensemble(realization), windows)[0]
