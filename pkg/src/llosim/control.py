"""Measurement/correction loops for free-running, feedback and hybrid-feedforward control.

Corrections are ideal frequency steps applied at the correction instant of
each cycle, so an LLO sample is the raw LO sample plus g-bar times the sum
of all corrections applied before its window. The loop below applies the
correction rules sequentially in the time domain; the covariance-side
description of the same loop lives in :func:`estimator.unroll_functionals`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .controllers import ControllerKind, Feedback, FreeRun, HffBlock, HffMoving  # noqa: F401
from .errors import ConfigurationError, DomainError
from .estimator import Unrolled, unroll_functionals
from .ramsey import CycleSchedule, mean_sensitivity, point_values_ensemble, sample_windows_ensemble
from .spectra import TWO_PI, NoiseEnsemble, NoiseRealization, PowerSpectrum, synthesize_ensemble
from .stats import EnsembleStat, ratio_stat


@dataclass(frozen=True)
class LoopTrace:
    """Per-realization record of one loop run; arrays have a leading realization axis.

    ``lo_samples``/``llo_samples`` are indexed by window; the remaining arrays
    by cycle. ``offset_before``/``offset_after`` are y_LLO(t_c^k) just before
    and just after correction k, ``lo_at_correction`` is y_LO(t_c^k).
    """

    schedule: CycleSchedule
    lo_samples: np.ndarray
    llo_samples: np.ndarray
    corrections: np.ndarray
    correction_times: np.ndarray
    lo_at_correction: np.ndarray
    offset_before: np.ndarray
    offset_after: np.ndarray
    warmup: np.ndarray

    @property
    def size(self) -> int:
        return self.lo_samples.shape[0]

    def row(self, i: int) -> LoopTrace:
        sl = slice(i, i + 1)
        return LoopTrace(
            self.schedule,
            self.lo_samples[sl],
            self.llo_samples[sl],
            self.corrections[sl],
            self.correction_times,
            self.lo_at_correction[sl],
            self.offset_before[sl],
            self.offset_after[sl],
            self.warmup,
        )

    def applied_before(self, t: float) -> np.ndarray:
        """Sum of corrections applied at or before ``t``, per realization."""
        mask = self.correction_times <= t
        return self.corrections[:, mask].sum(axis=1)

    def llo_at(self, realization: NoiseRealization, t: float, i: int = 0) -> float:
        """y_LLO(t) = y_LO(t) + running correction sum (corrections act from t_c onward)."""
        return float(realization(t)) + float(self.applied_before(t)[i])

    def rows_csv(self, i: int = 0):
        """Per-cycle rows: cycle, t_c, raw sample, LLO sample, correction, true offset after."""
        last = np.cumsum(self.schedule.windows_per_cycle) - 1
        for k, t_c in enumerate(self.correction_times):
            j = last[k]
            yield (
                k,
                float(t_c),
                float(self.lo_samples[i, j]),
                float(self.llo_samples[i, j]),
                float(self.corrections[i, k]),
                float(self.offset_after[i, k]),
            )


def plan(
    schedule: CycleSchedule,
    controller: ControllerKind,
    spectrum: PowerSpectrum | None = None,
) -> Unrolled:
    """Correction rules (and their unrolled functionals) for ``controller`` on ``schedule``."""
    needs = isinstance(controller, (HffBlock, HffMoving)) and controller.coefficients is None
    if needs and spectrum is None:
        raise ConfigurationError("HFF controllers need the noise spectrum", field="spectrum")
    return unroll_functionals(schedule, controller, spectrum=spectrum if needs else None)


def apply_rules(
    lo_samples: np.ndarray,
    lo_points: np.ndarray,
    schedule: CycleSchedule,
    rules,
) -> LoopTrace:
    """Run the causal loop on raw samples (R, W) and raw correction-time values (R, C)."""
    R, W = lo_samples.shape
    C = len(schedule.cycles)
    if len(rules) != C:
        raise ConfigurationError("one correction rule per cycle required", field="controller")
    levels = np.array([mean_sensitivity(w) for w in schedule.windows])
    cyc_of = schedule.cycle_of_window()
    llo = np.empty_like(lo_samples)
    corr = np.zeros((R, C))
    before = np.empty((R, C))
    after = np.empty((R, C))
    running = np.zeros(R)
    j = 0
    for k in range(C):
        while j < W and cyc_of[j] == k:
            llo[:, j] = lo_samples[:, j] + levels[j] * running
            j += 1
        before[:, k] = lo_points[:, k] + running
        rule = rules[k]
        if rule.windows:
            corr[:, k] = -(llo[:, list(rule.windows)] @ rule.coeffs)
        running = running + corr[:, k]
        after[:, k] = lo_points[:, k] + running
    warm = np.array([r.warmup for r in rules], dtype=bool)
    return LoopTrace(schedule, lo_samples, llo, corr, schedule.correction_times, lo_points, before, after, warm)


def _check_fit(schedule, duration):
    if schedule.end > duration + 1e-9 or schedule.windows[0].t_start < -1e-12:
        raise ConfigurationError(
            f"schedule [0, {schedule.end}] does not fit in realization of duration {duration}",
            field="schedule",
        )


def run_ensemble(
    ensemble: NoiseEnsemble,
    schedule: CycleSchedule,
    controller: ControllerKind,
    unrolled: Unrolled | None = None,
) -> LoopTrace:
    _check_fit(schedule, ensemble.duration)
    unrolled = unrolled or plan(schedule, controller, ensemble.spectrum)
    lo = sample_windows_ensemble(ensemble, schedule.windows)
    pts = point_values_ensemble(ensemble, schedule.correction_times)
    return apply_rules(lo, pts, schedule, unrolled.rules)


def run_loop(
    realization: NoiseRealization,
    schedule: CycleSchedule,
    controller: ControllerKind,
    unrolled: Unrolled | None = None,
) -> LoopTrace:
    """Single-realization loop (a one-row :class:`LoopTrace`)."""
    ens = NoiseEnsemble(
        realization.omegas[None, :],
        realization.amplitudes,
        realization.phases[None, :],
        realization.duration,
        0,
        realization.spectrum,
    )
    return run_ensemble(ens, schedule, controller, unrolled)


def cycle_omega(schedule: CycleSchedule) -> float:
    """2 pi / T_c of the first cycle, used as the log/linear split of the synthesis grid."""
    c0 = schedule.cycles[0]
    t_c = c0.correction_time - c0.windows[0].t_start
    return TWO_PI / t_c if t_c > 0 else None


def simulate(
    spectrum: PowerSpectrum,
    schedule: CycleSchedule,
    controllers: Sequence[ControllerKind],
    ensemble_size: int,
    seed: int,
    grid_points: int = 2000,
    chunk: int = 1000,
    plans: Sequence[Unrolled] | None = None,
) -> list[LoopTrace]:
    """Run every controller on the same realizations (common random numbers).

    Realizations are synthesized in chunks of ``chunk``; realization ``i``
    always uses stream ``(seed, i)`` so results do not depend on chunking.
    """
    plans = plans or [plan(schedule, c, spectrum) for c in controllers]
    duration = schedule.end
    split = cycle_omega(schedule)
    parts: list[list[LoopTrace]] = [[] for _ in controllers]
    for start in range(0, ensemble_size, chunk):
        size = min(chunk, ensemble_size - start)
        ens = synthesize_ensemble(spectrum, duration, size, seed, grid_points, split, first_index=start)
        lo = sample_windows_ensemble(ens, schedule.windows)
        pts = point_values_ensemble(ens, schedule.correction_times)
        for i, p in enumerate(plans):
            parts[i].append(apply_rules(lo, pts, schedule, p.rules))
    return [_concat(p) for p in parts]


def _concat(traces: list[LoopTrace]) -> LoopTrace:
    t0 = traces[0]
    if len(traces) == 1:
        return t0
    cat = lambda name: np.concatenate([getattr(t, name) for t in traces])  # noqa: E731
    return LoopTrace(
        t0.schedule,
        cat("lo_samples"),
        cat("llo_samples"),
        cat("corrections"),
        t0.correction_times,
        cat("lo_at_correction"),
        cat("offset_before"),
        cat("offset_after"),
        t0.warmup,
    )


def accuracy_from_trace(trace: LoopTrace, correction: int = 0) -> EnsembleStat:
    """<y_LO(t_c)^2> / <y_LLO(t_c)^2> just after correction ``correction``."""
    num = trace.lo_at_correction[:, correction] ** 2
    den = trace.offset_after[:, correction] ** 2
    if not np.any(den):
        raise DomainError("divergent accuracy: the correction cancels the offset exactly")
    return ratio_stat(num, den)


def accuracy_mc(
    spectrum: PowerSpectrum,
    schedule: CycleSchedule,
    controller: ControllerKind,
    ensemble_size: int,
    seed: int,
    grid_points: int = 2000,
) -> EnsembleStat:
    """Monte Carlo correction accuracy at the first correction instant."""
    if ensemble_size < 100:
        raise ConfigurationError("accuracy_mc needs at least 100 realizations", field="ensemble.size")
    first = CycleSchedule(schedule.cycles[:1])
    (trace,) = simulate(spectrum, first, [controller], ensemble_size, seed, grid_points)
    return accuracy_from_trace(trace)
