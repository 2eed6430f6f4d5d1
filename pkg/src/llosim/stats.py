"""Ensemble statistics with standard errors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class EnsembleStat:
    mean: float
    std_error: float
    n_realizations: int

    def __post_init__(self):
        if self.n_realizations >= 2 and not (self.std_error >= 0):
            raise ValueError("std_error must be non-negative")


def mean_stat(values) -> EnsembleStat:
    """Mean over axis 0 with the usual sigma / sqrt(n) error."""
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    se = float(np.std(v, ddof=1) / np.sqrt(n)) if n >= 2 else float("nan")
    return EnsembleStat(float(np.mean(v)), se, n)


def ratio_stat(num, den) -> EnsembleStat:
    """mean(num) / mean(den) with a delete-one jackknife standard error.

    ``num`` and ``den`` are paired per realization.
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    n = num.size
    sn, sd = num.sum(), den.sum()
    if sd == 0:
        raise DomainError("zero denominator: divergent ratio")
    ratio = sn / sd
    if n < 2:
        return EnsembleStat(float(ratio), float("nan"), n)
    with np.errstate(divide="ignore", invalid="ignore"):
        loo = (sn - num) / (sd - den)
    se = np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return EnsembleStat(float(ratio), float(se), n)
