"""Paired t-test and paired effect sizes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats


class ZeroVariance(ValueError):
    pass


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int
    zero_variance: bool = False


@dataclass(frozen=True)
class EffectSize:
    d_z: float  # NaN when the differences have zero variance but a nonzero mean
    d_av: float


def _check(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    if len(a) < 2:
        raise ValueError("paired tests need at least two pairs")
    return a, b


def _constant(d: np.ndarray) -> bool:
    # a shifted copy (b + c) - b is only constant up to rounding
    return bool(np.ptp(d) <= 1e-12 * max(1.0, float(np.abs(d).max())))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-tailed paired t-test on d = a - b.

    If every difference is equal the statistic is degenerate: all zero gives
    t = 0, p = 1; a constant nonzero shift gives t = +/-inf, p = 0, and both
    cases are flagged with ``zero_variance``.
    """
    a, b = _check(a, b)
    d = a - b
    n = len(d)
    mean = d.mean()
    if _constant(d):
        if np.all(d == 0.0):
            return TTestResult(0.0, 1.0, n - 1, True)
        return TTestResult(math.copysign(math.inf, mean), 0.0, n - 1, True)
    t = mean / (d.std(ddof=1) / math.sqrt(n))
    p = float(2.0 * stats.t.sf(abs(t), n - 1))
    return TTestResult(float(t), min(p, 1.0), n - 1)


def cohens_dz(a: Sequence[float], b: Sequence[float]) -> float:
    """mean(a - b) / sd(a - b); raises ZeroVariance for a constant nonzero shift."""
    a, b = _check(a, b)
    d = a - b
    if _constant(d):
        if np.all(d == 0.0):
            return 0.0
        raise ZeroVariance("differences have zero variance")
    return float(d.mean() / d.std(ddof=1))


def cohens_dav(a: Sequence[float], b: Sequence[float]) -> float:
    """Mean difference over the average of the two sample SDs."""
    a, b = _check(a, b)
    diff = a.mean() - b.mean()
    denom = (a.std(ddof=1) + b.std(ddof=1)) / 2.0
    if denom == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return float(diff / denom)


def cohens_d(a: Sequence[float], b: Sequence[float]) -> EffectSize:
    try:
        dz = cohens_dz(a, b)
    except ZeroVariance:
        dz = math.nan
    return EffectSize(dz, cohens_dav(a, b))
