"""Covariance blocks, hybrid-feedforward coefficients and linear-functional bookkeeping.

Covariance-based quantities are evaluated on blocks normalized to unit point
variance: all quantities are divided by ``sigma_cc``. Coefficients obtained
this way apply unchanged to raw samples because a common rescaling of every
variable leaves the linear predictor invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .controllers import ControllerKind, Feedback, FreeRun, HffBlock, HffMoving
from .errors import ConfigurationError, EstimatorError
from .ramsey import CycleSchedule, MeasurementWindow, mean_sensitivity
from .spectra import PowerSpectrum, point_variance
from .xfer import CovarianceTable, Point

RIDGE = 1e-9
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class CovarianceBlocks:
    M: np.ndarray
    F: np.ndarray
    sigma_cc: float

    @property
    def n(self) -> int:
        return self.F.size

    @property
    def full(self) -> np.ndarray:
        n = self.n
        out = np.empty((n + 1, n + 1))
        out[:n, :n] = self.M
        out[:n, n] = out[n, :n] = self.F
        out[n, n] = self.sigma_cc
        return out

    def normalized(self) -> CovarianceBlocks:
        if not (self.sigma_cc > 0):
            raise EstimatorError("degenerate spectrum: point variance is zero")
        s = self.sigma_cc
        return CovarianceBlocks(self.M / s, self.F / s, 1.0)

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.full).min())

    def is_psd(self, tol: float = 1e-9) -> bool:
        return self.min_eigenvalue >= -tol * np.trace(self.full)


def build_sigma(
    spectrum: PowerSpectrum,
    windows: Sequence[MeasurementWindow],
    t_c: float,
    table: CovarianceTable | None = None,
) -> CovarianceBlocks:
    """(n+1)x(n+1) covariance of n window samples and the point value y(t_c)."""
    if not windows:
        raise ConfigurationError("build_sigma needs at least one window", field="windows")
    if t_c < windows[-1].t_end - 1e-12:
        raise ConfigurationError("prediction time precedes the last window", field="t_c")
    table = table or CovarianceTable(spectrum)
    items = list(windows) + [Point(t_c)]
    full = table.matrix(items)
    full = 0.5 * (full + full.T)
    n = len(windows)
    return CovarianceBlocks(full[:n, :n], full[:n, n].copy(), float(full[n, n]))


def predictor_coeffs_paper(
    blocks: CovarianceBlocks,
    w_k: float = 1.0,
    spectrum: PowerSpectrum | None = None,
    normalized: bool = True,
) -> np.ndarray:
    """c = F / sqrt(F^T M F) * w_k * (1/2pi) int S_y.

    With ``normalized`` the blocks are first divided by ``sigma_cc`` and the
    integral term is 1. Otherwise the raw blocks are used with the integral
    term taken as ``point_variance(spectrum)``.
    """
    if normalized:
        b = blocks.normalized()
        integral = 1.0
    else:
        if spectrum is None:
            raise ValueError("raw-unit coefficients need the spectrum")
        b = blocks
        integral = point_variance(spectrum)
    if not np.any(b.F):
        raise EstimatorError("no exploitable correlation: F is zero")
    q = float(b.F @ b.M @ b.F)
    if not (q > 0):
        raise EstimatorError(
            "F^T M F is not positive; M is singular along F (consider a ridge term)"
        )
    return b.F / np.sqrt(q) * w_k * integral


def predictor_coeffs_mmse(blocks: CovarianceBlocks, allow_ridge: bool = False) -> np.ndarray:
    """Linear MMSE coefficients M^{-1} F.

    If M is ill-conditioned (condition number above 1e12) an
    :class:`EstimatorError` is raised carrying the ridge-regularized solution
    in ``fallback``; ``allow_ridge=True`` returns that solution instead.
    """
    b = blocks.normalized()
    cond = np.linalg.cond(b.M)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        ridge = RIDGE * float(np.mean(np.diag(b.M)))
        fallback = np.linalg.solve(b.M + ridge * np.eye(b.n), b.F)
        if allow_ridge:
            return fallback
        err = EstimatorError(f"M is ill-conditioned (cond={cond:.3g}); ridge fallback available")
        err.fallback = fallback
        err.condition = cond
        raise err
    return np.linalg.solve(b.M, b.F)


def accuracy_analytic(blocks: CovarianceBlocks, w_k: float = 1.0) -> float:
    """(1 + w^2 - w |F|^2 / sqrt(F^T M F))^-1 on normalized blocks."""
    b = blocks.normalized()
    q = float(b.F @ b.M @ b.F)
    if not (q > 0):
        raise EstimatorError("F^T M F <= 0 violates positive semidefiniteness")
    return 1.0 / (1.0 + w_k**2 - w_k * float(b.F @ b.F) / np.sqrt(q))


def accuracy_of_coefficients(blocks: CovarianceBlocks, c) -> float:
    """sigma_cc / E[(y(t_c) - c.ybar)^2] for the correction C = -c.ybar."""
    c = np.asarray(c, dtype=float)
    mse = blocks.sigma_cc - 2.0 * c @ blocks.F + c @ blocks.M @ c
    return float(blocks.sigma_cc / mse) if mse > 0 else np.inf


def correlation_condition(blocks: CovarianceBlocks, w_k: float = 1.0) -> bool:
    """sqrt(F^T M F) < |F|^2 / w_k on normalized blocks."""
    if not (w_k > 0):
        return False
    b = blocks.normalized()
    lhs = np.sqrt(max(float(b.F @ b.M @ b.F), 0.0))
    return bool(lhs < float(b.F @ b.F) / w_k)


def coefficients_for(blocks: CovarianceBlocks, mode: str, gain: float) -> np.ndarray:
    if mode == "paper":
        return predictor_coeffs_paper(blocks, gain)
    return gain * predictor_coeffs_mmse(blocks, allow_ridge=True)


# -- linear functionals ------------------------------------------------------------


@dataclass(frozen=True)
class LinearFunctional:
    """sum_i coefficient_i * (raw LO window sample or raw point value)."""

    terms: tuple[tuple[object, float], ...]

    def items(self):
        return [t for t, _ in self.terms]

    def coefficients(self):
        return np.array([c for _, c in self.terms])


def llo_covariance(
    spectrum_or_table: PowerSpectrum | CovarianceTable, fa: LinearFunctional, fb: LinearFunctional
) -> float:
    """Bilinear expansion sum_ij a_i b_j Cov(raw_i, raw_j)."""
    table = (
        spectrum_or_table
        if isinstance(spectrum_or_table, CovarianceTable)
        else CovarianceTable(spectrum_or_table)
    )
    if not fa.terms or not fb.terms:
        return 0.0
    R = table.matrix(fa.items(), fb.items())
    return float(fa.coefficients() @ R @ fb.coefficients())


@dataclass(frozen=True)
class CorrectionRule:
    """C_k = -sum_i coeffs[i] * LLO sample ``windows[i]``."""

    cycle: int
    windows: tuple[int, ...]
    coeffs: np.ndarray
    warmup: bool = False


@dataclass
class Unrolled:
    """Every LLO quantity as a dense coefficient vector over ``basis``.

    ``basis`` lists the raw LO window samples (schedule order) followed by the
    raw point values y_LO(t_c^k). Row k of ``corrections`` is C_k; rows of
    ``offset_before``/``offset_after`` are y_LLO(t_c^k) just before/after C_k.
    """

    basis: list
    samples: np.ndarray
    corrections: np.ndarray
    offset_before: np.ndarray
    offset_after: np.ndarray
    rules: list[CorrectionRule]
    table: CovarianceTable | None = None
    _raw: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_windows(self) -> int:
        return self.samples.shape[0]

    def functional(self, row: np.ndarray) -> LinearFunctional:
        return LinearFunctional(
            tuple((self.basis[i], float(row[i])) for i in np.flatnonzero(row))
        )

    def raw_covariance(self) -> np.ndarray:
        if self._raw is None:
            if self.table is None:
                raise ValueError("no spectrum attached to this unrolling")
            R = self.table.matrix(self.basis)
            self._raw = 0.5 * (R + R.T)
        return self._raw

    def covariance(self, A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
        R = self.raw_covariance()
        B = A if B is None else B
        return A @ R @ B.T


def _rule_windows(schedule, controller, k, cyc_windows, seen):
    """Indices of the LLO samples the k-th correction combines."""
    if isinstance(controller, Feedback):
        return [cyc_windows[-1]]
    if isinstance(controller, HffBlock):
        if len(cyc_windows) != controller.n:
            raise ConfigurationError(
                f"HffBlock(n={controller.n}) needs {controller.n} windows per cycle, cycle {k} has {len(cyc_windows)}",
                field="controller.n",
            )
        return list(cyc_windows)
    if isinstance(controller, HffMoving):
        return seen[-controller.n :]
    return []


def unroll_functionals(
    schedule: CycleSchedule,
    controller: ControllerKind,
    spectrum: PowerSpectrum | None = None,
    table: CovarianceTable | None = None,
) -> Unrolled:
    """Express every LLO sample, correction and correction-time offset in raw LO quantities.

    Corrections are linear in earlier LLO samples, so induction over cycles
    gives exact coefficient vectors. HFF coefficients that are not fixed on
    the controller are recomputed for every correction from the covariances
    of the LLO samples it uses, which requires ``spectrum`` (or ``table``).
    """
    if table is None and spectrum is not None:
        table = CovarianceTable(spectrum)
    windows = schedule.windows
    W, C = len(windows), len(schedule.cycles)
    basis = list(windows) + [Point(t) for t in schedule.correction_times]
    B = W + C
    levels = np.array([mean_sensitivity(w) for w in windows])
    samples = np.zeros((W, B))
    corrections = np.zeros((C, B))
    before = np.zeros((C, B))
    after = np.zeros((C, B))
    out = Unrolled(basis, samples, corrections, before, after, [], table)
    running = np.zeros(B)
    seen: list[int] = []
    j = 0
    for k, cyc in enumerate(schedule.cycles):
        cyc_windows = []
        for _ in cyc.windows:
            samples[j] = running * levels[j]
            samples[j, j] += 1.0
            cyc_windows.append(j)
            seen.append(j)
            j += 1
        target = running.copy()
        target[W + k] += 1.0
        before[k] = target
        idx = _rule_windows(schedule, controller, k, cyc_windows, seen)
        coeffs = _rule_coefficients(out, controller, idx, target, levels)
        warm = isinstance(controller, HffMoving) and len(idx) < controller.n
        out.rules.append(CorrectionRule(k, tuple(idx), coeffs, warm))
        if idx:
            corrections[k] = -(coeffs @ samples[idx])
        running = running + corrections[k]
        after[k] = target + corrections[k]
    return out


def _rule_coefficients(out: Unrolled, controller, idx, target, levels) -> np.ndarray:
    if not idx:
        return np.zeros(0)
    if isinstance(controller, Feedback):
        return np.array([controller.gain / levels[idx[0]]])
    if isinstance(controller, FreeRun):
        return np.zeros(0)
    if controller.coefficients is not None:
        return np.array(controller.coefficients[-len(idx):])
    if out.table is None:
        raise ConfigurationError("HFF coefficients need a spectrum", field="spectrum")
    L = out.samples[idx]
    blocks = CovarianceBlocks(
        out.covariance(L), out.covariance(L, target[None, :])[:, 0], float(out.covariance(target[None, :])[0, 0])
    )
    return coefficients_for(blocks, controller.coeff_mode, controller.gain)
