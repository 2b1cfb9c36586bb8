"""Special functions used throughout the package.

Everything here is real-valued and double precision.  The incomplete
gamma function follows the classical regime split (series for
x < a + 1, continued fraction otherwise); the gamma-ratio series
``g_series_*`` is the radial profile of the flat model reproducing
kernel at an even-order curvature zero, evaluated two independent ways
so one can serve as the oracle for the other.

Quantities with dynamic range beyond double precision (binomials near
2**k, monomial norms of high tensor powers) are carried as natural logs
with an explicit sign, see :class:`LogValue`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

_MAX_ITER = 600
_EPS = 2.220446049250313e-16


class NonConvergenceError(RuntimeError):
    """An iterative evaluation failed to meet its tail bound."""


@dataclass(frozen=True)
class LogValue:
    """A real number stored as (log magnitude, sign).

    ``sign == 0`` represents exactly zero and the magnitude is ignored.
    Multiplication adds logs and multiplies signs exactly.
    """

    log_magnitude: float
    sign: int

    @staticmethod
    def zero() -> "LogValue":
        return LogValue(-math.inf, 0)

    @staticmethod
    def from_float(x: float) -> "LogValue":
        if x == 0.0:
            return LogValue.zero()
        return LogValue(math.log(abs(x)), 1 if x > 0 else -1)

    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_magnitude)

    def __mul__(self, other: "LogValue") -> "LogValue":
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.log_magnitude + other.log_magnitude, self.sign * other.sign)


def log_sum_exp(values: Iterable[LogValue]) -> LogValue:
    """Sum of LogValues via max-shifted accumulation.

    Exact on empty input (returns zero).  Mixed signs are supported;
    exact cancellation yields zero.
    """
    vals = [v for v in values if v.sign != 0]
    if not vals:
        return LogValue.zero()
    m = max(v.log_magnitude for v in vals)
    acc = 0.0
    for v in vals:
        acc += v.sign * math.exp(v.log_magnitude - m)
    if acc == 0.0:
        return LogValue.zero()
    return LogValue(m + math.log(abs(acc)), 1 if acc > 0 else -1)


def log_gamma(a: float) -> float:
    """ln Gamma(a) for a > 0."""
    if not a > 0.0:
        raise ValueError(f"log_gamma requires a > 0, got {a}")
    return math.lgamma(a)


def _gamma_p_series(a: float, x: float, tol: float = 1e-16) -> float:
    # regularized lower incomplete gamma, series branch (x < a + 1)
    if x == 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * tol:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NonConvergenceError(f"incomplete gamma series stalled at a={a}, x={x}")


def _gamma_q_contfrac(a: float, x: float, tol: float = 1e-16) -> float:
    # regularized upper incomplete gamma, Lentz continued fraction (x >= a + 1)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NonConvergenceError(f"incomplete gamma continued fraction stalled at a={a}, x={x}")


def regularized_gamma_q(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a), in [0, 1], decreasing in x."""
    if not a > 0.0 or x < 0.0:
        raise ValueError(f"regularized_gamma_q requires a > 0 and x >= 0, got a={a}, x={x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def upper_incomplete_gamma(a: float, x: float) -> float:
    """Gamma(a, x) = int_x^inf t**(a-1) exp(-t) dt for a > 0, x >= 0."""
    if not a > 0.0 or x < 0.0:
        raise ValueError(f"upper_incomplete_gamma requires a > 0 and x >= 0, got a={a}, x={x}")
    return regularized_gamma_q(a, x) * math.exp(math.lgamma(a))


def log_generalized_binomial(k: float, x: float) -> float:
    """ln of Gamma(k+1) / (Gamma(x+1) Gamma(k-x+1)); the +1 convention."""
    if x < 0.0 or x > k:
        raise ValueError(f"generalized binomial requires 0 <= x <= k, got k={k}, x={x}")
    return math.lgamma(k + 1.0) - math.lgamma(x + 1.0) - math.lgamma(k - x + 1.0)


def generalized_binomial(k: float, x: float) -> float:
    """Gamma(k+1) / (Gamma(x+1) Gamma(k-x+1)), computed in the log domain.

    Reduces to the integer binomial coefficient for integer x.
    """
    return math.exp(log_generalized_binomial(k, x))


def _check_even_order(r: int) -> int:
    if r < 2 or r % 2 != 0:
        raise ValueError(f"order parameter must be an even integer >= 2, got {r}")
    return r // 2


def g_series_direct(r: int, x: float, terms: int) -> float:
    """G(x) = sum_{a>=0} x**a / Gamma(2(a+1)/r), truncated at ``terms``.

    This is the defining series of the model-kernel radial profile and
    the oracle for :func:`g_series_closed`.  Raises if the ratio-test
    tail bound has not dropped below 1e-14 of the running sum.
    """
    _check_even_order(r)
    if x < 0.0:
        raise ValueError(f"g_series_direct requires x >= 0, got {x}")
    if x == 0.0:
        return 1.0 / math.gamma(2.0 / r)
    lx = math.log(x)
    total = 0.0
    term = 0.0
    last = terms
    for alpha in range(terms + 1):
        term = math.exp(alpha * lx - math.lgamma(2.0 * (alpha + 1) / r))
        total += term
        if alpha >= 1 and term <= 1e-17 * total:
            last = alpha
            break
    next_term = math.exp((last + 1) * lx - math.lgamma(2.0 * (last + 2) / r))
    ratio = next_term / term if term > 0.0 else (0.0 if next_term == 0.0 else math.inf)
    tail = 0.0 if next_term == 0.0 else (math.inf if ratio >= 1.0 else next_term / (1.0 - ratio))
    if tail > 1e-14 * total:
        raise NonConvergenceError(
            f"g_series_direct tail bound not reached at r={r}, x={x}, terms={terms}"
        )
    return total


def _exp_scaled_gamma_p(a: float, y: float) -> float:
    """exp(y) * P(a, y) without forming exp(y) when it would overflow."""
    if y == 0.0:
        return 0.0
    p = 1.0 - regularized_gamma_q(a, y)
    if y < 700.0:
        return math.exp(y) * p
    # p is 1 to machine precision this far into the tail
    return math.exp(y) if y < 709.0 else math.inf


def g_series_closed(r: int, x: float) -> float:
    """Closed form of the model-kernel profile via the incomplete gamma.

    With s = r/2 and a_j = (j+1)/s:

        G(x) = sum_{j<s} x**j / Gamma(a_j)
             + x**(s-1) exp(x**s) sum_{j<s} P(a_j, x**s)

    where P is the regularized lower incomplete gamma.  The bracketed
    sum solves F0' = F0 + sum_{j<s} y**(a_j - 1)/Gamma(a_j), F0(0) = 0,
    which is what resummation of the tail of the direct series gives.
    """
    s = _check_even_order(r)
    if x < 0.0:
        raise ValueError(f"g_series_closed requires x >= 0, got {x}")
    head = sum(x ** j / math.gamma((j + 1) / s) for j in range(s))
    if x == 0.0:
        return head if s > 1 else 1.0
    y = x ** s
    corr = sum(_exp_scaled_gamma_p((j + 1) / s, y) for j in range(s))
    return head + x ** (s - 1) * corr
