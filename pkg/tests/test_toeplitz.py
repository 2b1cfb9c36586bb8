"""Compressed multiplier matrices, the dense eigensolver and spectral limits."""

import math

import numpy as np
import pytest

from spherequant.cp1 import GeometryConfig, OMEGA_R, ROUND_FS, h0_dimension
from spherequant.quadrature import integral_01
from spherequant.toeplitz import (
    EigenConvergenceError,
    HermitianMatrix,
    Symbol,
    composition_defect,
    hermitian_eigen,
    operator_norm,
    preset_symbols,
    szego_target,
    szego_trace,
    toeplitz_matrix,
)

CFG2 = GeometryConfig(2, OMEGA_R)
CFG4 = GeometryConfig(4, OMEGA_R)


def _random_hermitian(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HermitianMatrix((A + A.conj().T) / 2.0)


def _charpoly(M):
    """Coefficients of det(t I - M), descending, via Faddeev-LeVerrier."""
    A = np.asarray(M, dtype=complex)
    n = A.shape[0]
    coeffs = [1.0]
    Nk = A.copy()
    I = np.eye(n)
    for k in range(1, n + 1):
        ck = -np.trace(Nk).real / k
        coeffs.append(ck)
        Nk = A @ (Nk + ck * I)
    return np.array(coeffs)


def _bisect_real_roots(coeffs, lo, hi, n_roots):
    """All real roots of a polynomial with real coefficients by sign-change
    scan plus bisection; requires the roots to be simple in (lo, hi)."""

    def p(t):
        acc = 0.0
        for c in coeffs:
            acc = acc * t + c
        return acc

    grid = np.linspace(lo, hi, 20001)
    vals = np.array([p(t) for t in grid])
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        a, b = grid[i], grid[i + 1]
        fa = p(a)
        for _ in range(100):
            m = 0.5 * (a + b)
            fm = p(m)
            if fa * fm <= 0:
                b = m
            else:
                a, fa = m, fm
        roots.append(0.5 * (a + b))
    assert len(roots) == n_roots, "oracle expected simple real roots"
    return np.array(roots)


# --- matrix construction ----------------------------------------------------


def test_identity_symbol_gives_identity():
    one = preset_symbols()["one"]
    for cfg, k in ((CFG2, 5), (CFG4, 3)):
        M = toeplitz_matrix(cfg, k, one)
        n = h0_dimension(k, cfg.r)
        assert np.allclose(M.entries, np.eye(n), atol=1e-12)


def test_constant_symbol_scales_identity():
    three = Symbol.radial(lambda rho: 3.0 * np.ones_like(rho), 3.0, "three")
    M = toeplitz_matrix(CFG2, 4, three)
    assert np.allclose(M.entries, 3.0 * np.eye(5), atol=1e-11)
    assert math.isclose(operator_norm(CFG2, 4, three), 3.0, rel_tol=1e-12)


def test_diagonal_entries_beta_ratio_oracle():
    # r=2, k=2, f = rho^2/(1+rho^2): in the Beta variable the entries are
    # B(alpha+2, k-alpha+1)/B(alpha+1, k-alpha+1) = (alpha+1)/(k+2)
    f = Symbol.radial(lambda rho: rho ** 2 / (1.0 + rho ** 2), 1.0, "u")
    M = toeplitz_matrix(CFG2, 2, f)
    expect = np.array([1.0, 2.0, 3.0]) / 4.0
    assert np.allclose(np.diag(M.entries).real, expect, atol=1e-12)
    assert M.is_diagonal


def test_angular_symbol_band_structure():
    ang = preset_symbols()["angular"]
    M = toeplitz_matrix(CFG2, 6, ang)
    E = M.entries
    assert np.allclose(np.diag(E), 0.0, atol=1e-14)
    assert np.max(np.abs(np.triu(E, 2))) < 1e-14
    assert np.max(np.abs(np.diag(E, -1))) > 0.01
    assert np.allclose(E, E.conj().T, atol=1e-14)


def test_linearity_in_symbol():
    rng = np.random.default_rng(17)
    f = Symbol.radial(lambda rho: 1.0 / (1.0 + rho ** 2), 1.0)
    g = Symbol.radial(lambda rho: rho ** 2 / (1.0 + rho ** 2) ** 2, 0.25)
    a, b = 1.7, -0.4
    comb = Symbol.radial(lambda rho: a / (1.0 + rho ** 2) + b * rho ** 2 / (1.0 + rho ** 2) ** 2, 2.0)
    M = toeplitz_matrix(CFG4, 8, comb)
    Mf = toeplitz_matrix(CFG4, 8, f)
    Mg = toeplitz_matrix(CFG4, 8, g)
    assert np.max(np.abs(M.entries - a * Mf.entries - b * Mg.entries)) < 1e-10


def test_trace_equals_diagonal_sum():
    f = preset_symbols()["cauchy"]
    for cfg, k in ((CFG2, 16), (CFG4, 16), (GeometryConfig(4, ROUND_FS), 8)):
        M = toeplitz_matrix(cfg, k, f)
        evals, _ = hermitian_eigen(M)
        assert math.isclose(float(np.sum(evals)), float(np.trace(M.entries).real),
                            rel_tol=1e-10)


# --- eigensolver -------------------------------------------------------------


def test_eigen_identity_and_diagonal():
    evals, vecs = hermitian_eigen(HermitianMatrix(np.eye(5)))
    assert np.allclose(evals, 1.0)
    d = np.array([3.0, -1.0, 2.0, 0.5])
    evals, vecs = hermitian_eigen(HermitianMatrix(np.diag(d)))
    assert np.allclose(evals, np.sort(d))
    assert np.allclose(np.abs(vecs[np.argsort(d), np.arange(4)]), 1.0)


def test_eigen_4x4_against_charpoly_bisection():
    rng = np.random.default_rng(42)
    M = _random_hermitian(rng, 4)
    coeffs = _charpoly(M.entries)
    bound = float(np.abs(M.entries).sum(axis=1).max()) + 1.0
    oracle = _bisect_real_roots(coeffs, -bound, bound, 4)
    evals, _ = hermitian_eigen(M)
    assert np.allclose(np.sort(oracle), evals, atol=1e-9)


def test_eigen_residuals_and_orthonormality():
    rng = np.random.default_rng(7)
    for n in (8, 40, 120):
        M = _random_hermitian(rng, n)
        evals, V = hermitian_eigen(M)
        norm = np.linalg.norm(M.entries, 2)
        res = np.max(np.abs(M.entries @ V - V * evals[None, :]))
        assert res <= 1e-10 * norm
        assert np.max(np.abs(V.conj().T @ V - np.eye(n))) < 1e-11
        assert np.all(np.diff(evals) >= -1e-12)


def test_eigen_matches_numpy_spectrum():
    rng = np.random.default_rng(3)
    M = _random_hermitian(rng, 60)
    evals, _ = hermitian_eigen(M)
    assert np.allclose(evals, np.linalg.eigvalsh(M.entries), atol=1e-10)


# --- operator norms ----------------------------------------------------------


def test_contraction_random_radial_symbols():
    rng = np.random.default_rng(23)
    rho_grid = np.logspace(-2, 2, 400)
    for _ in range(20):
        a, b, c = rng.uniform(-1.0, 1.0, 3)

        def prof(rho, a=a, b=b, c=c):
            return (a + b * rho ** 2 / (1.0 + rho ** 4)
                    + c / (1.0 + rho ** 2))

        sup = float(np.max(np.abs(prof(rho_grid))))
        f = Symbol.radial(prof, sup)
        for k in (4, 16, 64, 256):
            for cfg in (CFG2, CFG4):
                assert operator_norm(cfg, k, f) <= sup + 1e-9


def test_positivity_preserved():
    f = preset_symbols()["equator"]
    for cfg, k in ((CFG2, 32), (CFG4, 32)):
        M = toeplitz_matrix(cfg, k, f)
        evals, _ = hermitian_eigen(M)
        assert evals[0] >= -1e-10 * f.sup_norm_hint


def test_norm_monotone_toward_sup():
    f = preset_symbols()["cauchy"]
    defects = [abs(operator_norm(CFG4, k, f) - 1.0) for k in (16, 64, 256)]
    assert defects[2] < defects[0]


def test_angular_norm_approaches_sup():
    ang = preset_symbols()["angular"]
    n64 = operator_norm(CFG2, 64, ang)
    n256 = operator_norm(CFG2, 256, ang)
    assert n64 <= 0.5 + 1e-9 and n256 <= 0.5 + 1e-9
    assert abs(n256 - 0.5) < abs(n64 - 0.5)


# --- composition and traces --------------------------------------------------


def test_composition_identity_exact():
    syms = preset_symbols()
    assert composition_defect(CFG2, 12, syms["one"], syms["cauchy"]) < 1e-12
    three = Symbol.radial(lambda rho: 3.0 * np.ones_like(rho), 3.0)
    assert composition_defect(CFG4, 6, three, three) < 1e-10


def test_composition_defect_decays():
    syms = preset_symbols()
    d = [composition_defect(CFG4, k, syms["cauchy"], syms["bump"]) for k in (32, 128, 512)]
    assert d[2] < d[1] < d[0]


def test_composition_defect_general_symbol():
    syms = preset_symbols()
    d32 = composition_defect(CFG2, 32, syms["angular"], syms["cauchy"])
    d128 = composition_defect(CFG2, 128, syms["angular"], syms["cauchy"])
    assert d128 < d32


def test_szego_trace_identity_symbol():
    for cfg, k in ((CFG2, 64), (CFG4, 64)):
        got = szego_trace(cfg, k, preset_symbols()["one"], lambda s: s)
        assert math.isclose(got, cfg.r / 2.0 + 1.0 / k, rel_tol=1e-13)
    assert szego_trace(CFG2, 32, preset_symbols()["cauchy"], lambda s: 0.0 * s) == 0.0


def test_szego_target_oracle():
    # radial target is (r/2) int_0^1 phi(f(rho(u))) du; for r=2 and
    # f = 1/(1+rho^2) = 1-u, phi = s^2 this is int (1-u)^2 du = 1/3
    f = Symbol.radial(lambda rho: 1.0 / (1.0 + rho ** 2), 1.0)
    got = szego_target(2, f, lambda s: s ** 2)
    assert math.isclose(got, 1.0 / 3.0, rel_tol=1e-10)


def test_szego_convergence_both_volumes():
    f = preset_symbols()["cauchy"]
    phi = lambda s: s ** 2
    target = szego_target(2, f, phi)
    for vol in (OMEGA_R, ROUND_FS):
        cfg = GeometryConfig(2, vol)
        errs = [abs(szego_trace(cfg, k, f, phi) - target) for k in (64, 256)]
        assert errs[1] < errs[0]


def test_szego_five_pair_convergence_both_volumes():
    # fixed pair set with regular error decay; checked at r=4 where the
    # two volume measures actually differ
    syms = preset_symbols()
    pairs = [("bump", lambda s: s ** 3), ("equator", lambda s: s ** 2),
             ("peak0", lambda s: s ** 2), ("bump", lambda s: s ** 2),
             ("equator", lambda s: s ** 3)]
    for vol in (OMEGA_R, ROUND_FS):
        cfg = GeometryConfig(4, vol)
        for fname, phi in pairs:
            f = syms[fname]
            target = szego_target(4, f, phi)
            e64 = abs(szego_trace(cfg, 64, f, phi) - target)
            e256 = abs(szego_trace(cfg, 256, f, phi) - target)
            assert e256 < e64, (vol, fname)


def test_entry_quadrature_failure_report():
    from spherequant.quadrature import QuadratureError

    jump = Symbol.radial(lambda rho: np.where(rho < 1.0, 1.0, 0.0), 1.0, "jump")
    with pytest.raises(QuadratureError):
        toeplitz_matrix(CFG2, 16, jump)


def test_szego_trace_angular_symbol():
    # odd symbol: the trace of T_f vanishes, phi = s^2 sees the band
    ang = preset_symbols()["angular"]
    tr1 = szego_trace(CFG2, 48, ang, lambda s: s)
    assert abs(tr1) < 1e-10
    got = szego_trace(CFG2, 48, ang, lambda s: s ** 2)
    target = szego_target(2, ang, lambda s: s ** 2)
    assert abs(got - target) < 0.05 * max(target, 1e-3)
