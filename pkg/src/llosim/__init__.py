"""Simulation and estimation tools for locked local oscillators.

Noise spectra and their synthesis (:mod:`spectra`), Ramsey windows and
schedules (:mod:`ramsey`), transfer-function covariances (:mod:`xfer`),
hybrid-feedforward predictors (:mod:`estimator`), the correction loop
(:mod:`control`), stability metrics (:mod:`metrics`) and duration
optimization and sweeps (:mod:`optimize`).
"""

__version__ = "0.1.0"

from .control import LoopTrace, accuracy_mc, run_ensemble, run_loop, simulate
from .controllers import Feedback, FreeRun, HffBlock, HffMoving
from .errors import ConfigurationError, DomainError, EstimatorError, QuadratureError
from .estimator import (
    CovarianceBlocks,
    accuracy_analytic,
    build_sigma,
    correlation_condition,
    llo_covariance,
    predictor_coeffs_mmse,
    predictor_coeffs_paper,
    unroll_functionals,
)
from .metrics import (
    allan_variance_fd,
    allan_variance_td,
    ensemble_metric,
    expected_sample_variance_llo,
    sample_variance,
)
from .optimize import SimplexOptions, SweepSpec, nelder_mead, optimize_ramsey_durations, sweep
from .ramsey import MeasurementWindow, build_schedule, duty_schedule, sample_window
from .spectra import PowerSpectrum, Spur, normalize_at, point_variance, synthesize, synthesize_ensemble, white
from .stats import EnsembleStat
from .xfer import CovarianceTable, overlap_integral

__all__ = [
    "ConfigurationError",
    "CovarianceBlocks",
    "CovarianceTable",
    "DomainError",
    "EnsembleStat",
    "EstimatorError",
    "Feedback",
    "FreeRun",
    "HffBlock",
    "HffMoving",
    "LoopTrace",
    "MeasurementWindow",
    "PowerSpectrum",
    "QuadratureError",
    "SimplexOptions",
    "Spur",
    "SweepSpec",
    "accuracy_analytic",
    "accuracy_mc",
    "allan_variance_fd",
    "allan_variance_td",
    "build_schedule",
    "build_sigma",
    "correlation_condition",
    "duty_schedule",
    "ensemble_metric",
    "expected_sample_variance_llo",
    "llo_covariance",
    "nelder_mead",
    "normalize_at",
    "optimize_ramsey_durations",
    "overlap_integral",
    "point_variance",
    "predictor_coeffs_mmse",
    "predictor_coeffs_paper",
    "run_ensemble",
    "run_loop",
    "sample_variance",
    "sample_window",
    "simulate",
    "sweep",
    "synthesize",
    "synthesize_ensemble",
    "unroll_functionals",
    "white",
]
