"""Compressed multiplication operators on the polynomial section spaces.

A bounded symbol f acts on the tensor-power space by multiply-then-
project; in the orthonormal monomial basis the matrix entry (alpha,
beta) only sees the (alpha - beta)-th angular Fourier mode of f, so
symbols are declared by a finite list of modes and every entry reduces
to one radial quadrature.  Radial symbols give diagonal matrices and
bypass the eigensolver entirely.

The dense Hermitian eigensolver is the classical pair
Householder tridiagonalisation + implicit-shift QL with a 30-sweep cap
per eigenvalue; sizes stay around a thousand here, which it handles in
seconds without outside help.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, Mapping

import numpy as np

from .cp1 import GeometryConfig, OMEGA_R, h0_dimension, monomial_basis
from .quadrature import integral_01, weighted_integral_01

_EPS = np.finfo(float).eps


class EigenConvergenceError(RuntimeError):
    def __init__(self, index: int):
        super().__init__(f"QL sweep cap exceeded while isolating eigenvalue {index}")
        self.index = index


class Symbol:
    """Bounded multiplier with finite angular Fourier content.

    ``modes`` maps the angular frequency m to a callable giving the
    radial amplitude g_m(rho); the represented function is
    f(z) = sum_m g_m(|z|) exp(i m arg z).  For a real-valued symbol the
    caller must supply conjugate pairs g_{-m} = conj(g_m); the matrix
    build relies on it for Hermiticity.
    """

    def __init__(self, modes: Mapping[int, Callable], sup_norm_hint: float, name: str = ""):
        if not modes:
            raise ValueError("a symbol needs at least one angular mode")
        self.modes: Dict[int, Callable] = dict(modes)
        self.sup_norm_hint = float(sup_norm_hint)
        self.name = name

    @staticmethod
    def radial(profile: Callable, sup_norm_hint: float, name: str = "") -> "Symbol":
        return Symbol({0: profile}, sup_norm_hint, name)

    @staticmethod
    def cosine(m: int, profile: Callable, sup_norm_hint: float, name: str = "") -> "Symbol":
        """profile(rho) * cos(m theta) as the conjugate mode pair +-m."""
        if m <= 0:
            raise ValueError("cosine mode requires m > 0")
        half = lambda rho: 0.5 * np.asarray(profile(rho))
        return Symbol({m: half, -m: half}, sup_norm_hint, name)

    @property
    def is_radial(self) -> bool:
        return set(self.modes) == {0}

    def __call__(self, z: complex) -> complex:
        z = complex(z)
        rho = abs(z)
        theta = math.atan2(z.imag, z.real)
        total = 0j
        for m, g in self.modes.items():
            total += complex(np.asarray(g(np.array([rho])))[0]) * np.exp(1j * m * theta)
        return total

    def product(self, other: "Symbol") -> "Symbol":
        """Pointwise product; modes convolve."""
        modes: Dict[int, Callable] = {}
        for m1, g1 in self.modes.items():
            for m2, g2 in other.modes.items():
                m = m1 + m2
                prev = modes.get(m)
                if prev is None:
                    modes[m] = (lambda a, b: lambda rho: np.asarray(a(rho)) * np.asarray(b(rho)))(g1, g2)
                else:
                    modes[m] = (lambda p, a, b: lambda rho: np.asarray(p(rho)) + np.asarray(a(rho)) * np.asarray(b(rho)))(prev, g1, g2)
        return Symbol(modes, self.sup_norm_hint * other.sup_norm_hint,
                      name=f"{self.name}*{other.name}")


class HermitianMatrix:
    """Dense Hermitian matrix; eigenvalues are real by construction."""

    def __init__(self, entries: np.ndarray):
        entries = np.asarray(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be square")
        scale = np.max(np.abs(entries)) or 1.0
        if np.max(np.abs(entries - entries.conj().T)) > 1e-12 * scale:
            raise ValueError("matrix is not Hermitian")
        self.entries = entries

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def is_diagonal(self) -> bool:
        off = self.entries - np.diag(np.diag(self.entries))
        return not np.any(off)


def _band_values(cfg: GeometryConfig, k: int, m: int, profile: Callable,
                 scale: float = 1.0) -> np.ndarray:
    """Normalised entries <f_m s_beta, s_alpha> along the band alpha - beta = m."""
    basis = monomial_basis(cfg, k)
    lns = basis.log_norm_sq
    n = basis.degree_max + 1
    alphas = np.arange(m, n)
    betas = alphas - m
    s2 = (alphas + betas).astype(float)  # exponent pair sum
    off = -0.5 * (lns[alphas] + lns[betas])
    r = float(cfg.r)

    if cfg.volume_form == OMEGA_R:

        def log_weight(u, lu, l1u):
            s = (s2 / r)[:, None]
            return s * lu[None, :] + (k - s) * l1u[None, :] + off[:, None]

    else:

        def log_weight(u, lu, l1u):
            q = lu - l1u
            c = ((s2 + 2.0) / r - 1.0)[:, None]
            base = math.log(2.0 / r) + (k - 2.0) * l1u - 2.0 * np.logaddexp(0.0, (2.0 / r) * q)
            return c * q[None, :] + base[None, :] + off[:, None]

    def factor(u, lu, l1u):
        with np.errstate(over="ignore"):
            rho = np.exp(np.clip(lu - l1u, -700.0, 700.0) / r)
            return np.asarray(profile(rho))

    vals, _ = weighted_integral_01(log_weight, factor, abs_tol=1e-10 * max(1.0, scale))
    return vals


def toeplitz_matrix(cfg: GeometryConfig, k: int, f: Symbol) -> HermitianMatrix:
    """Matrix of project(f * .) on the orthonormal monomial basis."""
    n = h0_dimension(k, cfg.r)
    M = np.zeros((n, n), dtype=complex)
    for m in sorted(f.modes):
        if m < 0:
            continue  # filled by conjugate symmetry from the +m band
        vals = _band_values(cfg, k, m, f.modes[m], scale=f.sup_norm_hint)
        alphas = np.arange(m, n)
        if m == 0:
            M[alphas, alphas] = vals.real
        else:
            M[alphas, alphas - m] = vals
            M[alphas - m, alphas] = np.conj(vals)
    return HermitianMatrix(M)


# ---------------------------------------------------------------------------
# dense Hermitian eigensolver


def _householder_tridiagonalize(a: np.ndarray):
    """Unitary reduction to a real symmetric tridiagonal (d, e) with
    accumulated transform q, so that q^H a q is tridiagonal."""
    n = a.shape[0]
    A = np.array(a, dtype=complex)
    Q = np.eye(n, dtype=complex)
    for j in range(n - 2):
        x = A[j + 1:, j]
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0.0 else 1.0
        alpha = -phase * nx
        v = x.copy()
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        B = A[j + 1:, j + 1:]
        p = B @ v
        w = p - (np.vdot(v, p).real) * v
        B -= 2.0 * np.outer(v, w.conj()) + 2.0 * np.outer(w, v.conj())
        A[j + 1, j] = alpha
        A[j + 2:, j] = 0.0
        A[j, j + 1] = np.conj(alpha)
        A[j, j + 2:] = 0.0
        Qv = Q[:, j + 1:] @ v
        Q[:, j + 1:] -= 2.0 * np.outer(Qv, v.conj())
    d = np.real(np.diag(A)).copy()
    sub = np.array([A[i + 1, i] for i in range(n - 1)], dtype=complex)
    # rotate away the subdiagonal phases
    s = 1.0 + 0.0j
    scale = np.ones(n, dtype=complex)
    for i in range(n - 1):
        if sub[i] != 0.0:
            s = s * sub[i] / abs(sub[i])
        scale[i + 1] = s
    e = np.abs(sub)
    Q = Q * scale[None, :]
    return d, e, Q


def _tql2(d: np.ndarray, e: np.ndarray, Q: np.ndarray, max_sweeps: int = 30):
    """Implicit-shift QL on a real symmetric tridiagonal, rotations
    accumulated into the (complex) column basis Q.  EISPACK lineage."""
    n = d.size
    d = d.copy()
    ee = np.zeros(n)
    ee[: n - 1] = e
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise EigenConvergenceError(l)
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            rr = math.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + math.copysign(rr, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * ee[i]
                b = c * ee[i]
                rr = math.hypot(f, g)
                ee[i + 1] = rr
                if rr == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / rr
                c = g / rr
                g = d[i + 1] - p
                rr = (d[i] - g) * s + 2.0 * c * b
                p = s * rr
                d[i + 1] = g + p
                g = c * rr - b
                col = Q[:, i].copy()
                Q[:, i + 1], Q[:, i] = s * col + c * Q[:, i + 1], c * col - s * Q[:, i + 1]
            if underflow:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    order = np.argsort(d, kind="stable")
    return d[order], Q[:, order]


def hermitian_eigen(M: HermitianMatrix):
    """Full eigendecomposition, eigenvalues ascending, eigenvectors as columns."""
    if M.is_diagonal:
        d = np.real(np.diag(M.entries))
        order = np.argsort(d, kind="stable")
        vecs = np.eye(M.dimension, dtype=complex)[:, order]
        return d[order], vecs
    d, e, Q = _householder_tridiagonalize(M.entries)
    return _tql2(d, e, Q)


# ---------------------------------------------------------------------------
# operator-level quantities


def operator_norm(cfg: GeometryConfig, k: int, f: Symbol) -> float:
    """Spectral norm of the compressed multiplier; at most sup |f|, and
    approaching it as k grows."""
    M = toeplitz_matrix(cfg, k, f)
    if M.is_diagonal:
        return float(np.max(np.abs(np.diag(M.entries).real)))
    evals, _ = hermitian_eigen(M)
    return float(np.max(np.abs(evals)))


def composition_defect(cfg: GeometryConfig, k: int, f: Symbol, g: Symbol) -> float:
    """Spectral norm of T_f T_g - T_{fg}."""
    A = toeplitz_matrix(cfg, k, f)
    B = toeplitz_matrix(cfg, k, g)
    C = toeplitz_matrix(cfg, k, f.product(g))
    D = A.entries @ B.entries - C.entries
    if A.is_diagonal and B.is_diagonal and C.is_diagonal:
        return float(np.max(np.abs(np.diag(D))))
    H = HermitianMatrix(D.conj().T @ D)
    evals, _ = hermitian_eigen(H)
    return float(math.sqrt(max(float(evals[-1]), 0.0)))


def szego_trace(cfg: GeometryConfig, k: int, f: Symbol, phi: Callable[[np.ndarray], np.ndarray]) -> float:
    """(1/k) sum of phi over the spectrum of the compressed multiplier."""
    M = toeplitz_matrix(cfg, k, f)
    if M.is_diagonal:
        evals = np.diag(M.entries).real
    else:
        evals, _ = hermitian_eigen(M)
    return float(np.sum(phi(evals)) / k)


def szego_target(r: int, f: Symbol, phi: Callable[[np.ndarray], np.ndarray],
                 angle_points: int = 64) -> float:
    """Curvature integral int phi(f) against the (unnormalised) curvature
    measure of mass r/2; the k -> infinity limit of :func:`szego_trace`.

    In the radial coordinate u = rho**r / (1 + rho**r) the curvature
    measure is exactly (r/2) du, so only an angular average remains.
    """

    def integrand(u):
        with np.errstate(over="ignore", divide="ignore"):
            lg = np.log(u) - np.log1p(-u)
            rho = np.exp(np.clip(lg, -700.0, 700.0) / r)
        if f.is_radial:
            vals = np.asarray(f.modes[0](rho)).real
            return phi(vals)
        acc = np.zeros_like(rho)
        thetas = (np.arange(angle_points) + 0.5) * (2.0 * np.pi / angle_points)
        for theta in thetas:
            fv = np.zeros_like(rho, dtype=complex)
            for m, g in f.modes.items():
                fv += np.asarray(g(rho)) * np.exp(1j * m * theta)
            acc += phi(fv.real)
        return acc / angle_points

    return (r / 2.0) * integral_01(integrand, rel_tol=1e-11)


def preset_symbols() -> Dict[str, Symbol]:
    """Named symbols used by the experiment runner and the test suite."""
    return {
        "one": Symbol.radial(lambda rho: np.ones_like(rho), 1.0, "one"),
        "cauchy": Symbol.radial(lambda rho: 1.0 / (1.0 + rho ** 2), 1.0, "cauchy"),
        "bump": Symbol.radial(_bump_profile, 0.5, "bump"),
        "peak0": Symbol.radial(_peak0_profile, 1.0, "peak0"),
        "equator": Symbol.radial(lambda rho: (rho / (1.0 + rho ** 2)) ** 2, 0.25, "equator"),
        "angular": Symbol.cosine(1, lambda rho: rho / (1.0 + rho ** 2), 0.5, "angular"),
    }


def _bump_profile(rho):
    # rho^2/(1+rho^4), written to stay finite for rho ~ 1e150
    rho = np.asarray(rho, dtype=float)
    with np.errstate(over="ignore"):
        small = rho <= 1.0
        inv = np.where(small, 1.0, 1.0 / np.where(small, 1.0, rho))
        direct = rho ** 2 / (1.0 + rho ** 4)
        flipped = inv ** 2 / (inv ** 4 + 1.0)
    return np.where(small, direct, flipped)


def _peak0_profile(rho):
    rho = np.asarray(rho, dtype=float)
    with np.errstate(over="ignore"):
        small = rho <= 1.0
        inv = np.where(small, 1.0, 1.0 / np.where(small, 1.0, rho))
        direct = 1.0 / (1.0 + rho ** 4)
        flipped = inv ** 4 / (inv ** 4 + 1.0)
    return np.where(small, direct, flipped)
