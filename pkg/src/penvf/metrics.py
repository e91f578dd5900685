"""Losses and the paired t-test used to compare selection methods."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import ShapeError, SizeError


def mean_absolute_error(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise ShapeError(f"predictions {p.shape} and targets {t.shape} differ in shape")
    if p.size == 0:
        raise SizeError("mean absolute error of an empty sample")
    return float(np.abs(p - t).mean())


def squared_error(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise ShapeError(f"predictions {p.shape} and targets {t.shape} differ in shape")
    return float(((p - t) ** 2).mean())


LOSSES = {"mae": mean_absolute_error, "mse": squared_error}


class TTestResult(NamedTuple):
    t: float
    p: float
    degenerate: bool = False


def student_t_sf2(t: float, df: int) -> float:
    """Two-sided tail probability P(|T| >= |t|) for Student's t with ``df`` dof."""
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return float(special.betainc(0.5 * df, 0.5, x))


def paired_t_test(errors_a, errors_b) -> TTestResult:
    """Two-sided paired t-test on per-realisation errors.

    All-zero differences give ``t = 0, p = 1``. Constant non-zero differences
    have zero spread; they return an infinite statistic with ``p = 0`` and the
    ``degenerate`` flag set.
    """
    a = np.asarray(errors_a, dtype=float)
    b = np.asarray(errors_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"paired samples differ in shape: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise SizeError("paired t-test needs at least two pairs")
    diff = a - b
    if not diff.any():
        return TTestResult(0.0, 1.0)
    mean = diff.mean()
    sd = diff.std(ddof=1)
    if sd == 0.0:
        return TTestResult(math.copysign(math.inf, mean), 0.0, True)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(float(t), student_t_sf2(t, n - 1))
