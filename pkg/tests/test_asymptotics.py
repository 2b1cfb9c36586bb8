"""Exponent fitting and Richardson refinement."""

import math

import numpy as np
import pytest

from spherequant.asymptotics import RateFit, loglog_slope, richardson_extrapolate


def test_exact_power_law():
    xs = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    fit = loglog_slope(xs, xs ** 2)
    assert math.isclose(fit.slope, 2.0, abs_tol=1e-12)
    assert fit.max_residual <= 1e-12
    assert fit.points_used == 5


def test_scaled_power_law_intercept():
    xs = np.array([1.0, 4.0, 16.0, 64.0])
    fit = loglog_slope(xs, 5.0 * xs ** (-1.0 / 3.0))
    assert math.isclose(fit.slope, -1.0 / 3.0, abs_tol=1e-12)
    assert math.isclose(fit.intercept, math.log(5.0), abs_tol=1e-12)


def test_rescaling_invariance():
    rng = np.random.default_rng(4)
    xs = np.array([2.0, 4.0, 8.0, 16.0, 32.0])
    ys = np.exp(rng.normal(size=5)) * xs ** 1.3
    a = loglog_slope(xs, ys)
    b = loglog_slope(xs, 7.5 * ys)
    assert math.isclose(a.slope, b.slope, rel_tol=1e-12)
    assert math.isclose(b.intercept - a.intercept, math.log(7.5), rel_tol=1e-10)


def test_degenerate_inputs():
    with pytest.raises(ValueError):
        loglog_slope([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        loglog_slope([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])  # span < 4
    with pytest.raises(ValueError):
        loglog_slope([1.0, 2.0, 8.0], [1.0, -2.0, 3.0])


def test_richardson_two_term_model():
    ks = [16, 32, 64, 128]
    a, b = 3.7, -11.0
    values = [a + b / k for k in ks]
    got = richardson_extrapolate(ks, values, 1.0)
    assert math.isclose(got, a, abs_tol=1e-10)


def test_richardson_constant_sequence():
    got = richardson_extrapolate([8, 16, 32], [2.5, 2.5, 2.5], 0.5)
    assert math.isclose(got, 2.5, rel_tol=1e-15)


def test_richardson_fractional_exponent():
    ks = [16, 32, 64, 128, 256]
    a, b = 1.25, 4.0
    values = [a + b * k ** (-1.0 / 3.0) for k in ks]
    got = richardson_extrapolate(ks, values, 1.0 / 3.0)
    assert math.isclose(got, a, abs_tol=1e-12)


def test_richardson_grid_validation():
    with pytest.raises(ValueError):
        richardson_extrapolate([16, 48, 96], [1.0, 2.0, 3.0], 1.0)
    with pytest.raises(ValueError):
        richardson_extrapolate([16, 32], [1.0, 2.0], 1.0)
