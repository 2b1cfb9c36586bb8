"""Gaussian random polynomial ensembles and their zero statistics.

Two ensembles per (r, k):

* ``full_basis``    -- degree r k / 2 with coefficient standard deviations
  1/||z**alpha|| from the true L2 norms of the degenerate volume form;
  the zero counting measure then carries the full curvature mass r/2
  per unit tensor power.
* ``paper_literal`` -- degree k with weights sqrt(binom(k, 2 alpha / r)),
  the family interpolating between the SU(2) ensemble (r = 2) and Kac
  polynomials (r -> infinity).  For r > 2 its k zeros cannot fill the
  limit measure; it is kept for side-by-side reporting, with the
  predicted truncation radius (2/(r-2))**(1/r).

Sampling is counter based: polynomial ``index`` under ``seed`` is drawn
from its own Philox stream, so any sample is reproducible in isolation
and pooling is order independent.

Roots come from Aberth-Ehrlich simultaneous iteration after a variable
rescaling that equilibrates coefficient magnitudes; the polynomial and
its log-derivative are evaluated through the reversed coefficients
outside the unit disk, which keeps degree ~1000 evaluations finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .cp1 import GeometryConfig, OMEGA_R, monomial_basis
from .specfun import log_generalized_binomial

FULL_BASIS = "full_basis"
PAPER_LITERAL = "paper_literal"

_DEGREE_CAP = 1024


class RootConvergenceError(RuntimeError):
    """Aberth sweeps exhausted before the correction threshold."""


class InsufficientDataError(ValueError):
    """A pooled statistic was requested from fewer than 100 roots."""


@dataclass(frozen=True)
class EnsembleSpec:
    mode: str
    k: int
    r: int
    seed: int
    samples: int

    def __post_init__(self):
        if self.mode not in (FULL_BASIS, PAPER_LITERAL):
            raise ValueError(f"unknown ensemble mode {self.mode!r}")
        if self.r < 2 or self.r % 2 != 0:
            raise ValueError(f"r must be an even integer >= 2, got {self.r}")
        if self.k < 1 or self.samples < 1:
            raise ValueError("k and samples must be positive")
        if self.degree > _DEGREE_CAP:
            raise ValueError(
                f"degree {self.degree} exceeds the cap {_DEGREE_CAP}; "
                "root-finder conditioning would dominate the statistics"
            )

    @property
    def degree(self) -> int:
        return self.r * self.k // 2 if self.mode == FULL_BASIS else self.k


@dataclass(frozen=True)
class RootSample:
    """Roots of one draw: the finite ones plus the count absorbed at infinity."""

    roots: np.ndarray
    count_at_infinity: int
    residual: float


def coefficient_log_weights(spec: EnsembleSpec) -> np.ndarray:
    """Log of the coefficient standard deviations w_alpha."""
    if spec.mode == FULL_BASIS:
        cfg = GeometryConfig(r=spec.r, volume_form=OMEGA_R)
        return -0.5 * monomial_basis(cfg, spec.k).log_norm_sq
    alphas = np.arange(spec.k + 1)
    return 0.5 * np.array(
        [log_generalized_binomial(spec.k, 2.0 * a / spec.r) for a in alphas]
    )


def sample_polynomial(spec: EnsembleSpec, index: int) -> np.ndarray:
    """Coefficients (ascending degree) of draw ``index``; a pure function
    of (seed, index) via a dedicated Philox counter block."""
    if index < 0 or index >= spec.samples:
        raise ValueError(f"index {index} outside [0, {spec.samples})")
    lw = coefficient_log_weights(spec)
    n = lw.size
    bg = np.random.Philox(
        counter=np.array([0, 0, 0, index], dtype=np.uint64),
        key=np.array([spec.seed, 0], dtype=np.uint64),
    )
    z = np.random.Generator(bg).standard_normal(2 * n)
    c = (z[:n] + 1j * z[n:]) / math.sqrt(2.0)
    # overall scale is irrelevant to the zero set; shift for conditioning
    return c * np.exp(lw - lw.max())


def _initial_guesses(b: np.ndarray) -> np.ndarray:
    """Starting points on circles read off the upper convex hull of
    (j, ln|b_j|) (the coefficient Newton polygon)."""
    d = b.size - 1
    with np.errstate(divide="ignore"):
        logs = np.where(b != 0.0, np.log(np.abs(np.where(b != 0.0, b, 1.0))), -np.inf)
    hull = [0]
    for j in range(1, d + 1):
        if not np.isfinite(logs[j]):
            continue
        while len(hull) >= 2:
            j1, j2 = hull[-2], hull[-1]
            if (logs[j] - logs[j1]) * (j2 - j1) >= (logs[j2] - logs[j1]) * (j - j1):
                hull.pop()
            else:
                break
        hull.append(j)
    guesses = np.empty(d, dtype=complex)
    pos = 0
    for (j1, j2) in zip(hull, hull[1:]):
        radius = math.exp((logs[j1] - logs[j2]) / (j2 - j1))
        count = j2 - j1
        ang = 2.0 * np.pi * (np.arange(count) + 0.5) / count + 0.4 + 0.26 * j1
        guesses[pos : pos + count] = radius * np.exp(1j * ang)
        pos += count
    return guesses


def _newton_ratio(b: np.ndarray, w: np.ndarray):
    """(p/p', scaled residual, at-noise-floor mask) at each point.

    The polynomial is evaluated through the reversed coefficients outside
    the unit disk so nothing overflows at degree ~1000.  The noise floor
    is the standard running Horner error bound; a point whose residual
    sits below it cannot be improved in double precision (the only stop
    that works at multiple roots, where corrections stall around the
    cluster radius instead of shrinking to machine size).
    """
    d = b.size - 1
    out = np.empty_like(w)
    resid = np.empty(w.shape)
    floor = np.empty(w.shape)
    inside = np.abs(w) <= 1.0
    for flip in (False, True):
        mask = ~inside if flip else inside
        if not np.any(mask):
            continue
        ws = 1.0 / w[mask] if flip else w[mask]
        coeffs = b[::-1] if flip else b
        aw = np.abs(ws)
        p = np.full(ws.shape, coeffs[d], dtype=complex)
        dp = np.zeros(ws.shape, dtype=complex)
        e = np.full(ws.shape, abs(coeffs[d]))
        for j in range(d - 1, -1, -1):
            dp = dp * ws + p
            p = p * ws + coeffs[j]
            e = e * aw + abs(coeffs[j])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            if flip:
                # p(w) = w^d q(1/w); p'(w) = w^(d-1) (d q(v) - v q'(v))
                ratio = w[mask] * p / (d * p - ws * dp)
        out[mask] = ratio
        resid[mask] = np.abs(p)
        floor[mask] = 2.0 * d * 2.220446049250313e-16 * e
    return out, resid, floor


def find_roots(coeffs: Sequence[complex], max_sweeps: int = 200) -> RootSample:
    """All roots by Aberth-Ehrlich iteration.

    Exact zero coefficients at the top or bottom of the vector become
    roots at infinity / at the origin.  Convergence per root is a
    correction below 1e-13 |root| + 1e-300; failure raises after
    ``max_sweeps`` simultaneous sweeps.
    """
    a = np.asarray(coeffs, dtype=complex)
    if a.ndim != 1 or a.size == 0 or not np.any(a != 0.0):
        raise ValueError("need a nonzero coefficient vector")
    nominal_degree = a.size - 1

    top = a.size - 1
    while a[top] == 0.0:
        top -= 1
    count_inf = nominal_degree - top
    bottom = 0
    while a[bottom] == 0.0:
        bottom += 1
    a = a[bottom : top + 1]
    d = a.size - 1
    zeros_at_origin = np.zeros(bottom, dtype=complex)

    if d == 0:
        return RootSample(roots=zeros_at_origin, count_at_infinity=count_inf, residual=0.0)

    # variable scaling z -> c w equilibrates |a_j| c^j at the two ends
    c = (abs(a[0]) / abs(a[d])) ** (1.0 / d)
    if not (np.isfinite(c) and c > 0.0):
        c = 1.0
    b = a * c ** np.arange(d + 1)
    b = b / np.abs(b).max()

    w = _initial_guesses(b)
    converged = False
    prev_step = np.full(d, np.inf)
    for _ in range(max_sweeps):
        N, resid, floor = _newton_ratio(b, w)
        N = np.where(np.isfinite(N), N, 1e-3 * (1.0 + np.abs(w)))
        diff = w[:, None] - w[None, :]
        np.fill_diagonal(diff, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        S = inv.sum(axis=1)
        denom = 1.0 - N * S
        small = np.abs(denom) < 1e-12
        denom = np.where(small, 1.0, denom)
        step = np.abs(N / denom)
        tiny = step < 1e-13 * np.abs(w) + 1e-300
        # residual at the Horner noise floor with steps no longer
        # shrinking: the root cluster is resolved to working precision
        # (multiple roots never meet the step criterion)
        stalled = (resid <= floor) & (step >= 0.25 * prev_step)
        w = w - N / denom
        prev_step = step
        if np.all(tiny | stalled):
            converged = True
            break
    if not converged:
        raise RootConvergenceError(
            f"no convergence after {max_sweeps} sweeps at degree {d}"
        )

    residual = float(np.max(np.abs(_poly_eval(b, w))))
    roots = np.concatenate([zeros_at_origin, c * w])
    return RootSample(roots=roots, count_at_infinity=count_inf, residual=residual)


def _poly_eval(b: np.ndarray, w: np.ndarray) -> np.ndarray:
    d = b.size - 1
    out = np.empty_like(w)
    inside = np.abs(w) <= 1.0
    if np.any(inside):
        ws = w[inside]
        p = np.full(ws.shape, b[d], dtype=complex)
        for j in range(d - 1, -1, -1):
            p = p * ws + b[j]
        out[inside] = p
    if np.any(~inside):
        ws = w[~inside]
        v = 1.0 / ws
        q = np.full(ws.shape, b[0], dtype=complex)
        for j in range(1, d + 1):
            q = q * v + b[j]
        # w**d overflows at high degree; |q(1/w)| is the residual of the
        # reversed polynomial at the same root and is the scaled measure
        out[~inside] = q
    return out


def _pooled(samples: Iterable[RootSample]) -> np.ndarray:
    parts = [s.roots for s in samples]
    if not parts:
        raise ValueError("no samples given")
    return np.concatenate(parts)


def radial_cdf_empirical(samples: Iterable[RootSample], t: float) -> float:
    """Fraction of pooled finite roots with modulus at most t."""
    roots = _pooled(samples)
    if roots.size == 0:
        raise ValueError("no finite roots in the pool")
    return float(np.count_nonzero(np.abs(roots) <= t) / roots.size)


def ks_statistic(samples: Iterable[RootSample], predicted_cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sup distance between the empirical modulus CDF and a predicted CDF."""
    mods = np.sort(np.abs(_pooled(samples)))
    n = mods.size
    if n < 100:
        raise InsufficientDataError(f"need at least 100 pooled roots, got {n}")
    F = np.asarray(predicted_cdf(mods), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - F)), np.max(np.abs((i - 1) / n - F))))


def angular_uniformity(samples: Iterable[RootSample]) -> float:
    """KS distance of pooled root arguments from the uniform law on [0, 2 pi)."""
    roots = _pooled(samples)
    if roots.size < 100:
        raise InsufficientDataError(f"need at least 100 pooled roots, got {roots.size}")
    ang = np.sort(np.mod(np.angle(roots), 2.0 * np.pi))
    n = ang.size
    F = ang / (2.0 * np.pi)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - F)), np.max(np.abs((i - 1) / n - F))))


def limit_radial_cdf(r: int) -> Callable[[np.ndarray], np.ndarray]:
    """Radial CDF t**r / (1 + t**r) of the normalised curvature measure."""

    def cdf(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            tr = t ** r
            return np.where(np.isfinite(tr), tr / (1.0 + tr), 1.0)

    return cdf


def truncation_radius(r: int) -> float:
    """Largest modulus the degree-k literal ensemble can populate in the
    k -> infinity limit, (2 / (r - 2))**(1/r); infinite at r = 2."""
    if r == 2:
        return math.inf
    return (2.0 / (r - 2.0)) ** (1.0 / r)
