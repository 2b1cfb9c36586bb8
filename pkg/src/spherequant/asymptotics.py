"""Rate extraction: log-log exponent fits and Richardson extrapolation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    max_residual: float
    points_used: int


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> RateFit:
    """Least-squares line through (ln x, ln y); the slope is the fitted exponent.

    Requires at least 3 points, all positive, with the abscissae spanning
    a factor of 4 or more (otherwise the exponent is not identifiable).
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise ValueError("need at least 3 (x, y) pairs")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("log-log fit requires positive data")
    if x.max() / x.min() < 4.0:
        raise ValueError("abscissae span less than a factor of 4; fit would be degenerate")
    lx = np.log(x)
    ly = np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = np.max(np.abs(ly - (slope * lx + intercept)))
    return RateFit(slope=float(slope), intercept=float(intercept),
                   max_residual=float(resid), points_used=int(x.size))


def richardson_extrapolate(ks: Sequence[int], values: Sequence[float],
                           exponent_step: float) -> float:
    """Eliminate the leading k**(-exponent_step) correction from a sequence
    sampled on a ratio-2 geometric grid; exact on a + b * k**-p models.
    """
    k = list(ks)
    v = np.asarray(values, dtype=float)
    if len(k) < 3 or len(k) != v.size:
        raise ValueError("need at least 3 (k, value) pairs")
    for a, b in zip(k, k[1:]):
        if b != 2 * a:
            raise ValueError(f"k grid must be geometric with ratio 2, got {a} -> {b}")
    if not exponent_step > 0.0:
        raise ValueError("exponent_step must be positive")
    w = 2.0 ** exponent_step
    refined = (w * v[1:] - v[:-1]) / (w - 1.0)
    return float(refined[-1])
