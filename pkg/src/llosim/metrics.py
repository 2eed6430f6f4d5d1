"""Stability statistics for sample sequences, loop traces and ensembles."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .control import LoopTrace, plan, simulate
from .controllers import ControllerKind
from .errors import ConfigurationError, DomainError
from .estimator import Unrolled, unroll_functionals
from .ramsey import CycleSchedule
from .spectra import PowerSpectrum
from .stats import EnsembleStat, mean_stat
from .xfer import Allan, CovarianceTable, overlap_integral

METRICS = ("sample_variance", "allan_variance")


def _as_samples(samples) -> np.ndarray:
    y = np.asarray(samples, dtype=float)
    if y.shape[-1] < 2:
        raise DomainError("need at least two samples")
    return y


def sample_variance(samples) -> float | np.ndarray:
    """(1/(N-1)) sum (y_k - mean)^2 along the last axis."""
    y = _as_samples(samples)
    return np.var(y, axis=-1, ddof=1)


def allan_variance_td(samples) -> float | np.ndarray:
    """Half the mean squared difference of consecutive samples, along the last axis."""
    y = _as_samples(samples)
    return 0.5 * np.mean(np.diff(y, axis=-1) ** 2, axis=-1)


def allan_variance_fd(spectrum: PowerSpectrum, T_R: float, rtol: float = 1e-6) -> float:
    """Allan variance of back-to-back windows of duration ``T_R`` from the spectrum."""
    return overlap_integral(spectrum, Allan(T_R), rtol).value


def prefix_sample_variance(samples: np.ndarray) -> np.ndarray:
    """Sample variance of every prefix y[..., :N] for N = 2 .. len, in one pass.

    Returns an array whose last axis is indexed by N - 2.
    """
    y = _as_samples(samples)
    n = np.arange(1, y.shape[-1] + 1)
    # centred second moment via cumulative sums of deviations from the first sample
    d = y - y[..., :1]
    c1 = np.cumsum(d, axis=-1)
    c2 = np.cumsum(d * d, axis=-1)
    var = (c2 - c1 * c1 / n) / np.maximum(n - 1, 1)
    return var[..., 1:]


def trace_metric(trace: LoopTrace, metric: str = "sample_variance", n: int | None = None) -> np.ndarray:
    """Per-realization metric of the LLO samples (first ``n`` samples if given)."""
    y = trace.llo_samples if n is None else trace.llo_samples[:, :n]
    if metric == "sample_variance":
        return sample_variance(y)
    if metric == "allan_variance":
        return allan_variance_td(y)
    raise ConfigurationError(f"unknown metric {metric!r}; valid: {list(METRICS)}", field="metric")


def curve_stats(trace: LoopTrace) -> list[EnsembleStat]:
    """Ensemble sample variance for every prefix length N = 2 .. W."""
    per = prefix_sample_variance(trace.llo_samples)
    return [mean_stat(per[:, i]) for i in range(per.shape[1])]


def ensemble_metric(
    spectrum: PowerSpectrum,
    schedule: CycleSchedule,
    controller: ControllerKind,
    metric_kind: str = "sample_variance",
    ensemble_size: int = 1000,
    seed: int = 0,
    curve: bool = False,
    grid_points: int = 2000,
) -> EnsembleStat | list[EnsembleStat]:
    """Mean and standard error of a trace metric over a seeded ensemble.

    With ``curve`` (sample variance only) the result is one statistic per
    prefix length N = 2 .. number of windows, all from the same traces.
    """
    if ensemble_size < 2:
        raise ConfigurationError("ensemble_size must be >= 2", field="ensemble.size")
    (trace,) = simulate(spectrum, schedule, [controller], ensemble_size, seed, grid_points)
    if curve:
        if metric_kind != "sample_variance":
            raise ConfigurationError("curves are only defined for the sample variance", field="metric")
        return curve_stats(trace)
    return mean_stat(trace_metric(trace, metric_kind))


# -- exact expectations from the unrolled loop --------------------------------------


def _sample_cov(unrolled: Unrolled, n: int | None) -> np.ndarray:
    L = unrolled.samples if n is None else unrolled.samples[:n]
    return unrolled.covariance(L)


def expected_sample_variance_from_cov(K: np.ndarray) -> float:
    """E[s^2_N] = (tr K - 1^T K 1 / N) / (N - 1) for zero-mean samples with covariance K."""
    N = K.shape[0]
    if N < 2:
        raise DomainError("need at least two samples")
    return float((np.trace(K) - K.sum() / N) / (N - 1))


def expected_sample_variance_llo(
    spectrum: PowerSpectrum,
    schedule: CycleSchedule,
    controller: ControllerKind,
    N: int | None = None,
    table: CovarianceTable | None = None,
) -> float:
    """Exact ensemble mean of the LLO sample variance over the first ``N`` samples."""
    table = table or CovarianceTable(spectrum)
    u = unroll_functionals(schedule, controller, table=table)
    return expected_sample_variance_from_cov(_sample_cov(u, N))


def expected_sample_variance_curve(unrolled: Unrolled) -> np.ndarray:
    """E[s^2_N] for N = 2 .. W from one unrolling."""
    K = unrolled.covariance(unrolled.samples)
    d = np.cumsum(np.diag(K))
    tot = np.cumsum(np.cumsum(K, axis=0), axis=1)
    N = np.arange(1, K.shape[0] + 1)
    out = (d - np.diag(tot) / N) / np.maximum(N - 1, 1)
    return out[1:]


def llo_true_variance(unrolled: Unrolled, k: int) -> float:
    """Var of the k-th LLO sample."""
    row = unrolled.samples[k : k + 1]
    return float(unrolled.covariance(row)[0, 0])


def llo_allan_variance(unrolled: Unrolled, k: int) -> float:
    """(1/2) E[(y_{k+1} - y_k)^2] of LLO samples k and k+1."""
    row = (unrolled.samples[k + 1] - unrolled.samples[k])[None, :]
    return 0.5 * float(unrolled.covariance(row)[0, 0])


def compare_curves(
    spectrum: PowerSpectrum,
    schedule: CycleSchedule,
    controllers: Sequence[ControllerKind],
    ensemble_size: int,
    seed: int,
    grid_points: int = 2000,
) -> list[list[EnsembleStat]]:
    """Sample-variance curves for several controllers on common realizations."""
    plans = [plan(schedule, c, spectrum) for c in controllers]
    traces = simulate(spectrum, schedule, controllers, ensemble_size, seed, grid_points, plans=plans)
    return [curve_stats(t) for t in traces]
