"""Nelder-Mead search over Ramsey durations and grid sweeps over schedule parameters."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .control import accuracy_mc, plan, simulate
from .controllers import ControllerKind, Feedback, FreeRun, HffBlock, controller_label
from .errors import ConfigurationError, DomainError, EstimatorError
from .estimator import accuracy_of_coefficients, build_sigma
from .metrics import expected_sample_variance_curve, prefix_sample_variance
from .ramsey import build_schedule, duty_schedule
from .spectra import PowerSpectrum
from .stats import EnsembleStat, mean_stat, ratio_stat
from .xfer import CovarianceTable

log = logging.getLogger(__name__)

AXES = ("duty_factor", "ramsey_ratio", "measurement_number")
OBJECTIVES = ("accuracy_mc", "accuracy_analytic")


@dataclass(frozen=True)
class SimplexOptions:
    max_iters: int = 500
    x_tolerance: float = 1e-8
    f_tolerance: float = 1e-10
    initial_step: float | Sequence[float] = 0.5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1", field="optimize.max_iters")
        if not (self.x_tolerance > 0 and self.f_tolerance > 0):
            raise ConfigurationError("tolerances must be positive", field="optimize.tolerance")


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


def _eval(objective, x, which):
    v = float(objective(x))
    if not math.isfinite(v):
        raise DomainError(f"objective is not finite at {which} x={np.array2string(np.asarray(x))}")
    return v


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0,
    opts: SimplexOptions = SimplexOptions(),
) -> SimplexResult:
    """Minimize ``objective`` with reflection 1, expansion 2, contraction 0.5 and shrink 0.5."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size
    steps = np.broadcast_to(np.asarray(opts.initial_step, dtype=float), (d,))
    simplex = np.vstack([x0] + [x0 + steps[i] * np.eye(d)[i] for i in range(d)])
    values = np.array([_eval(objective, simplex[i], f"vertex {i}") for i in range(d + 1)])
    it = 0
    converged = False
    while it < opts.max_iters:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diam = np.max(np.abs(simplex[1:] - simplex[0]))
        if diam < opts.x_tolerance or values[-1] - values[0] < opts.f_tolerance:
            converged = True
            break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = _eval(objective, xr, "reflection")
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = _eval(objective, xe, "expansion")
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (worst - centroid)
            fc = _eval(objective, xc, "contraction")
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                for i in range(1, d + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = _eval(objective, simplex[i], f"vertex {i}")
    best = int(np.argmin(values))
    return SimplexResult(simplex[best].copy(), float(values[best]), it, converged)


# -- Ramsey durations ---------------------------------------------------------------


def _first_correction_accuracy_analytic(spectrum, durations, dead_time, controller, table=None) -> float:
    schedule = build_schedule(1, durations, dead_time)
    u = plan(schedule, controller, spectrum)
    rule = u.rules[0]
    if not rule.windows:
        return 1.0
    table = table or CovarianceTable(spectrum)
    blocks = build_sigma(spectrum, schedule.windows, schedule.end, table)
    return accuracy_of_coefficients(blocks, rule.coeffs)


def first_correction_accuracy(
    spectrum: PowerSpectrum,
    durations: Sequence[float],
    dead_time: float,
    controller: ControllerKind,
    method: str = "accuracy_mc",
    ensemble_size: int = 5000,
    seed: int = 0,
    grid_points: int = 2000,
    table=None,
) -> EnsembleStat:
    """Accuracy of the first correction after back-to-back windows ``durations`` and ``dead_time``."""
    if method == "accuracy_analytic":
        v = _first_correction_accuracy_analytic(spectrum, durations, dead_time, controller, table)
        return EnsembleStat(v, 0.0, 0)
    if method != "accuracy_mc":
        raise ConfigurationError(f"unknown objective {method!r}; valid: {list(OBJECTIVES)}", field="optimize.objective")
    schedule = build_schedule(1, durations, dead_time)
    return accuracy_mc(spectrum, schedule, controller, ensemble_size, seed, grid_points)


@dataclass(frozen=True)
class DurationResult:
    durations: tuple[float, ...]
    t_min: float
    ratio: float
    accuracy: EnsembleStat
    equal_accuracy: EnsembleStat
    feedback_accuracy: EnsembleStat
    iterations: int
    converged: bool
    flat: bool
    history: list = field(default_factory=list, compare=False, repr=False)


def optimize_ramsey_durations(
    spectrum: PowerSpectrum,
    n: int = 2,
    t_min: float = 1.0,
    dead_time: float = 1.0,
    total_budget: float | None = None,
    objective: str = "accuracy_analytic",
    coeff_mode: str = "mmse",
    ensemble_size: int = 5000,
    seed: int = 0,
    grid_points: int = 2000,
    opts: SimplexOptions = SimplexOptions(max_iters=200, x_tolerance=1e-4, f_tolerance=1e-7),
    x0: Sequence[float] | None = None,
) -> DurationResult:
    """Maximize first-correction accuracy of HffBlock(n) over the window durations.

    Each duration lives in [t_min, t_max] through log d = log t_min +
    log(t_max/t_min) * sigmoid(x), with t_max = ``total_budget`` or 64 t_min.
    The Monte Carlo objective reuses one seed for every evaluation, so the
    landscape is deterministic. Baselines: all windows at ``t_min`` (equal
    durations) and Feedback on a single ``t_min`` window.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1", field="optimize.n")
    if not (t_min > 0) or not (dead_time >= 0):
        raise ConfigurationError("t_min must be > 0 and dead_time >= 0", field="optimize.t_min")
    t_max = float(total_budget) if total_budget is not None else 64.0 * t_min
    if not (t_max > t_min):
        raise ConfigurationError("total_budget must exceed t_min", field="optimize.total_budget")
    span = math.log(t_max / t_min)
    controller = HffBlock(n, coeff_mode=coeff_mode)
    table = None
    if objective == "accuracy_analytic":
        table = CovarianceTable(spectrum)

    def durations_of(x):
        return tuple(t_min * math.exp(span / (1.0 + math.exp(-xi))) for xi in np.clip(x, -30, 30))

    def acc(durs, ctrl=controller):
        return first_correction_accuracy(
            spectrum, durs, dead_time, ctrl, objective, ensemble_size, seed, grid_points, table
        )

    history = []

    def f(x):
        durs = durations_of(x)
        try:
            a = acc(durs).mean
        except EstimatorError:
            return 0.0
        history.append((durs, a))
        return -a

    if x0 is None:
        # start from a long first window and short later ones
        x0 = [1.0] + [-3.0] * (n - 1)
    res = nelder_mead(f, x0, opts)
    if not res.converged:
        log.warning("optimizer stopped after %d iterations without converging", res.iterations)
    best = durations_of(res.x)
    vals = np.array([a for _, a in history])
    flat = bool(vals.size and (vals.max() - vals.min()) <= 1e-3 * abs(vals.max()))
    return DurationResult(
        durations=best,
        t_min=t_min,
        ratio=best[0] / best[-1],
        accuracy=acc(best),
        equal_accuracy=acc((t_min,) * n),
        feedback_accuracy=acc((t_min,), Feedback()),
        iterations=res.iterations,
        converged=res.converged,
        flat=flat,
        history=history,
    )


# -- sweeps ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    controller: str
    stat: EnsembleStat
    vs_free_run: EnsembleStat
    vs_feedback: EnsembleStat

    def as_dict(self) -> dict:
        return {
            "axis": self.axis,
            "value": self.value,
            "controller": self.controller,
            "mean": self.stat.mean,
            "std_error": self.stat.std_error,
            "vs_free_run": self.vs_free_run.mean,
            "vs_free_run_se": self.vs_free_run.std_error,
            "vs_feedback": self.vs_feedback.mean,
            "vs_feedback_se": self.vs_feedback.std_error,
        }


@dataclass(frozen=True)
class SweepSpec:
    """Everything a sweep needs except the axis values; pickled to worker processes."""

    spectrum: PowerSpectrum
    controllers: tuple[ControllerKind, ...]
    axis: str
    n_cycles: int = 20
    cycle_time: float = 1.0
    duty_factor: float = 0.5
    t_min: float = 1.0
    dead_time: float = 1.0
    ensemble_size: int = 2000
    seed: int = 0
    grid_points: int = 2000
    method: str = "mc"

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigurationError(f"unknown axis {self.axis!r}; valid axes: {list(AXES)}", field="sweep.axis")
        if self.method not in ("mc", "analytic"):
            raise ConfigurationError("sweep method must be 'mc' or 'analytic'", field="sweep.method")


def _exact(value: float) -> EnsembleStat:
    return EnsembleStat(float(value), 0.0, 0)


def _rows_from_values(spec, axis_value, labels, per, fr, fb) -> list[SweepRow]:
    """Rows from per-realization metric arrays (MC) or scalars (analytic)."""
    rows = []
    for label, v in zip(labels, per):
        if np.ndim(v) == 0:
            stat, vf, vb = _exact(v), _exact(v / fr), _exact(v / fb)
        else:
            stat, vf, vb = mean_stat(v), ratio_stat(v, fr), ratio_stat(v, fb)
        rows.append(SweepRow(spec.axis, float(axis_value), label, stat, vf, vb))
    return rows


def _controllers_with_baselines(controllers):
    cs = list(controllers)
    for base in (FreeRun(), Feedback()):
        if base not in cs:
            cs.append(base)
    return cs


def _duty_point(spec: SweepSpec, d: float) -> list[SweepRow]:
    schedule = duty_schedule(spec.n_cycles, spec.cycle_time, d)
    return _schedule_rows(spec, schedule, d, spec.n_cycles)


def _schedule_rows(spec, schedule, axis_value, N) -> list[SweepRow]:
    cs = _controllers_with_baselines(spec.controllers)
    plans = [plan(schedule, c, spec.spectrum) for c in cs]
    if spec.method == "analytic":
        vals = [float(expected_sample_variance_curve(p)[N - 2]) for p in plans]
    else:
        traces = simulate(spec.spectrum, schedule, cs, spec.ensemble_size, spec.seed, spec.grid_points, plans=plans)
        vals = [prefix_sample_variance(t.llo_samples[:, :N])[:, -1] for t in traces]
    fr, fb = vals[cs.index(FreeRun())], vals[cs.index(Feedback())]
    k = len(spec.controllers)
    return _rows_from_values(spec, axis_value, [controller_label(c) for c in cs[:k]], vals[:k], fr, fb)


def _number_rows(spec: SweepSpec, values) -> list[SweepRow]:
    n_max = int(max(values))
    schedule = duty_schedule(n_max, spec.cycle_time, spec.duty_factor)
    cs = _controllers_with_baselines(spec.controllers)
    plans = [plan(schedule, c, spec.spectrum) for c in cs]
    if spec.method == "analytic":
        curves = [expected_sample_variance_curve(p) for p in plans]
    else:
        traces = simulate(spec.spectrum, schedule, cs, spec.ensemble_size, spec.seed, spec.grid_points, plans=plans)
        curves = [prefix_sample_variance(t.llo_samples) for t in traces]
    i_fr, i_fb = cs.index(FreeRun()), cs.index(Feedback())
    k = len(spec.controllers)
    labels = [controller_label(c) for c in cs[:k]]
    rows = []
    for N in values:
        j = int(N) - 2
        pick = [c[..., j] for c in curves]
        rows += _rows_from_values(spec, N, labels, pick[:k], pick[i_fr], pick[i_fb])
    return rows


def _ratio_point(spec: SweepSpec, r: float) -> list[SweepRow]:
    """First-correction accuracy with windows (r t_min, t_min) for HFF and t_min for Feedback."""
    method = "accuracy_analytic" if spec.method == "analytic" else "accuracy_mc"
    rows = []
    fb = first_correction_accuracy(
        spec.spectrum, (spec.t_min,), spec.dead_time, Feedback(), method, spec.ensemble_size, spec.seed, spec.grid_points
    )
    for c in spec.controllers:
        if isinstance(c, FreeRun):
            a = _exact(1.0)
        elif isinstance(c, Feedback):
            rows.append(SweepRow(spec.axis, float(r), controller_label(c), fb, fb, _exact(1.0)))
            continue
        else:
            durs = (r * spec.t_min,) + (spec.t_min,) * (c.n - 1)
            a = first_correction_accuracy(
                spec.spectrum, durs, spec.dead_time, c, method, spec.ensemble_size, spec.seed, spec.grid_points
            )
        rows.append(SweepRow(spec.axis, float(r), controller_label(c), a, _div(a, _exact(1.0)), _div(a, fb)))
    return rows


def _div(a: EnsembleStat, b: EnsembleStat) -> EnsembleStat:
    """a/b with independent-error propagation (used for accuracies from separate ensembles)."""
    if b.mean == 0:
        raise DomainError("division by zero accuracy")
    q = a.mean / b.mean
    rel = math.hypot(a.std_error / a.mean if a.mean else 0.0, b.std_error / b.mean)
    return EnsembleStat(q, abs(q) * rel, min(a.n_realizations, b.n_realizations))


def _point(args):
    spec, value = args
    if spec.axis == "duty_factor":
        return _duty_point(spec, value)
    return _ratio_point(spec, value)


def sweep(spec: SweepSpec, values: Sequence[float], workers: int = 1) -> list[SweepRow]:
    """Evaluate every axis value; rows come out in (value, controller) order.

    All grid points share the master seed (common random numbers), so results
    do not depend on ``workers`` or on the order of ``spec.controllers``.
    """
    values = [float(v) for v in values]
    if not values:
        raise ConfigurationError("sweep needs at least one axis value", field="sweep.values")
    if spec.axis == "duty_factor":
        for v in values:
            if not (0 < v <= 1):
                raise ConfigurationError(f"duty factor must lie in (0, 1], got {v}", field="sweep.values")
    elif spec.axis == "ramsey_ratio":
        if any(not (v > 0) for v in values):
            raise ConfigurationError("Ramsey ratios must be positive", field="sweep.values")
    else:
        if any(v < 2 or v != int(v) for v in values):
            raise ConfigurationError("measurement numbers must be integers >= 2", field="sweep.values")
        return _number_rows(spec, [int(v) for v in values])
    tasks = [(spec, v) for v in values]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_point, tasks))
    else:
        parts = [_point(t) for t in tasks]
    return [row for part in parts for row in part]
