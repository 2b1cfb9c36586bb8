"""Tanh-sinh (double exponential) quadrature, in ordinary and log domain.

The map u(t) = (1 + tanh((pi/2) sinh t)) / 2 turns the trapezoid rule on
t into an exponentially convergent rule on (0, 1) that tolerates
algebraic behaviour at both endpoints.  Rules are cached per refinement
level; level ``l`` uses step h = 2**-l and the node count roughly
doubles per level.

Two kinds of integrand show up in this package:

* moderately sized, possibly sign-changing integrands (Toeplitz matrix
  entries, Szego targets) -- handled in ordinary arithmetic after a
  row-wise max shift;
* positive integrands whose values overflow double precision by
  thousands of orders of magnitude (monomial norms at tensor powers in
  the thousands) -- handled entirely in the log domain.

Callers receive the nodes as (u, log u, log(1-u)) so that endpoint
factors like (1-u)**k can be formed without catastrophic rounding.
"""

from __future__ import annotations

import functools
import math
from typing import Callable

import numpy as np

# Beyond |t| = 6 the weights are below exp(-600); together with the
# mildest admissible endpoint exponent (-1 + 2/r, r <= 8) every dropped
# node is smaller than exp(-150) relative to the peak.
_T_MAX = 6.0

_LEVEL_START = 6
_LEVEL_MAX = 11


class QuadratureError(RuntimeError):
    """Level doubling did not reach the requested agreement."""


@functools.lru_cache(maxsize=None)
def nodes_01(level: int):
    """Nodes and log-weights for tanh-sinh on (0, 1) at the given level.

    Returns ``(u, log_u, log_1mu, log_w)`` as float64 arrays.  ``log_w``
    includes the trapezoid step, so an integral is approximated by
    ``sum(exp(log_f + log_w))``.
    """
    h = 2.0 ** (-level)
    n = int(_T_MAX / h)
    t = np.arange(-n, n + 1) * h
    s = 0.5 * np.pi * np.sinh(t)
    # u = logistic(2s); both tails computed to full relative precision
    log_u = -np.logaddexp(0.0, -2.0 * s)
    log_1mu = -np.logaddexp(0.0, 2.0 * s)
    # du/dt = (pi/4) cosh(t) / cosh(s)^2
    log_cosh_s = np.abs(s) - math.log(2.0) + np.log1p(np.exp(-2.0 * np.abs(s)))
    log_w = math.log(np.pi / 4.0) + np.log(np.cosh(t)) - 2.0 * log_cosh_s + math.log(h)
    u = np.exp(log_u)
    for arr in (u, log_u, log_1mu, log_w):
        arr.setflags(write=False)
    return u, log_u, log_1mu, log_w


def _row_logsumexp(log_rows: np.ndarray) -> np.ndarray:
    m = np.max(log_rows, axis=-1)
    safe = np.where(np.isfinite(m), m, 0.0)
    s = np.sum(np.exp(log_rows - safe[..., None]), axis=-1)
    with np.errstate(divide="ignore"):
        return np.where(np.isfinite(m), safe + np.log(s), -np.inf)


def log_integral_01(
    log_f: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    rel_tol: float = 1e-11,
    level_start: int = _LEVEL_START,
    level_max: int = _LEVEL_MAX,
):
    """Log of ``int_0^1 f(u) du`` for a positive integrand given in log form.

    ``log_f(u, log_u, log_1mu)`` must return the log-integrand, shaped
    ``(..., n_nodes)`` so a whole family of integrals is done at once.
    Levels are doubled until successive results agree to ``rel_tol`` in
    the log (= relative) sense.  Returns ``(log_values, level_used)``.
    """
    prev = None
    for level in range(level_start, level_max + 1):
        u, lu, l1u, lw = nodes_01(level)
        val = _row_logsumexp(log_f(u, lu, l1u) + lw)
        if prev is not None:
            both_zero = ~np.isfinite(val) & ~np.isfinite(prev)
            if np.all(both_zero | (np.abs(val - prev) <= rel_tol)):
                return val, level
        prev = val
    raise QuadratureError(f"no level-doubling agreement to {rel_tol} by level {level_max}")


def weighted_integral_01(
    log_weight: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    factor: Callable[[np.ndarray], np.ndarray],
    abs_tol: float = 1e-9,
    level_start: int = _LEVEL_START,
    level_max: int = _LEVEL_MAX,
):
    """``int_0^1 w(u) g(u) du`` with w positive (given as a log, row-wise)
    and g bounded but sign-changing.

    ``log_weight`` may fold a per-row normalisation offset into its rows
    so the returned values are O(1); convergence is judged against
    ``abs_tol`` on those values.  The factor also receives the log nodes
    so endpoint-sensitive expressions stay exact.  Returns
    ``(values, level_used)``.
    """
    prev = None
    for level in range(level_start, level_max + 1):
        u, lu, l1u, lw = nodes_01(level)
        rows = log_weight(u, lu, l1u) + lw
        g = factor(u, lu, l1u)
        m = np.max(rows, axis=-1)
        safe = np.where(np.isfinite(m), m, 0.0)
        val = np.sum(np.exp(rows - safe[..., None]) * g, axis=-1) * np.exp(safe)
        val = np.where(np.isfinite(m), val, 0.0)
        if prev is not None and np.all(np.abs(val - prev) <= abs_tol):
            return val, level
        prev = val
    raise QuadratureError(f"no level-doubling agreement to {abs_tol} by level {level_max}")


def integral_01(f: Callable[[np.ndarray], np.ndarray], rel_tol: float = 1e-12) -> float:
    """Plain scalar integral over (0, 1) for a smooth bounded integrand."""

    def w(u, lu, l1u):
        return np.zeros_like(u)

    val, _ = weighted_integral_01(w, lambda u, lu, l1u: f(u), abs_tol=rel_tol)
    return float(val)


def integral_0inf(f: Callable[[np.ndarray], np.ndarray], rel_tol: float = 1e-12,
                  level_start: int = _LEVEL_START, level_max: int = _LEVEL_MAX) -> float:
    """``int_0^inf f(rho) drho`` via the exp-sinh map rho = exp((pi/2) sinh t).

    Intended for integrands decaying at least exponentially at infinity
    and integrably at zero.  Nodes where the integrand evaluates to a
    non-finite value (overflow of an intermediate on a node whose true
    contribution underflows) are dropped.
    """
    prev = None
    for level in range(level_start, level_max + 1):
        h = 2.0 ** (-level)
        n = int(6.0 / h)
        t = np.arange(-n, n + 1) * h
        log_rho = 0.5 * np.pi * np.sinh(t)
        keep = np.abs(log_rho) < 700.0
        rho = np.exp(log_rho[keep])
        w = rho * 0.5 * np.pi * np.cosh(t[keep]) * h
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            fv = np.asarray(f(rho), dtype=float)
        contrib = fv * w
        val = float(np.sum(contrib[np.isfinite(contrib)]))
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-300):
            return val
        prev = val
    raise QuadratureError(f"exp-sinh rule did not settle to {rel_tol}")
