"""
splines_test.py - Linear and natural cubic interpolants
"""

import numpy as np
import pytest
from scipy.interpolate import CubicSpline
from lfp_lab.lfp_exceptions import SplineFitError, SplineDomainError
from lfp_lab.lfp_subsystem.lfp_solver import Dataset
from lfp_lab.oracle_subsystem.splines import fit

data = Dataset([[0.8], [0.05], [0.3], [0.55], [0.95]], [0.2, -0.4, 1.1, 0.0, -0.7])


def test_exact_at_knots():
    for kind in ('linear', 'natural_cubic'):
        spline = fit(kind, data)
        assert np.array_equal(spline.Knots, np.sort(data.X[:, 0]))
        assert np.allclose(spline(data.X[:, 0]), data.Y, atol=1e-14)
        assert spline(0.95) == -0.7


def test_linear_interpolates_between_knots():
    spline = fit('linear', Dataset([[0.0], [1.0]], [1.0, 3.0]))
    assert spline(0.25) == pytest.approx(1.5)
    assert spline(np.array([[0.5, 0.75]])).shape == (1, 2)


def test_cubic_matches_scipy_natural_spline():
    spline = fit('natural_cubic', data)
    reference = CubicSpline(spline.Knots, spline.Values, bc_type='natural')
    x = np.linspace(0.05, 0.95, 301)
    assert np.allclose(spline(x), reference(x), atol=1e-12)


def test_cubic_is_natural_and_twice_continuous():
    spline = fit('natural_cubic', data)
    last = spline.Knots.size - 2
    assert spline.piece_derivatives(0, spline.Knots[0])[2] == pytest.approx(0.0, abs=1e-12)
    assert spline.piece_derivatives(last, spline.Knots[-1])[2] == pytest.approx(0.0, abs=1e-10)
    for i in range(1, last + 1):
        left = spline.piece_derivatives(i - 1, spline.Knots[i])
        right = spline.piece_derivatives(i, spline.Knots[i])
        assert np.allclose(left, right, atol=1e-10)


def test_cubic_reproduces_lines():
    line = Dataset([[0.1], [0.2], [0.6], [0.9]], [0.3, 0.5, 1.3, 1.9])
    spline = fit('natural_cubic', line)
    x = np.linspace(0.1, 0.9, 17)
    assert np.allclose(spline(x), 2 * x + 0.1)


def test_two_knot_cubic_is_linear():
    spline = fit('natural_cubic', Dataset([[0.2], [0.6]], [1.0, 0.0]))
    assert spline(0.4) == pytest.approx(0.5)


def test_fit_errors():
    with pytest.raises(SplineFitError):
        fit('quadratic', data)
    with pytest.raises(SplineFitError):
        fit('linear', Dataset([[0.5]], [1.0]))
    with pytest.raises(SplineFitError):
        fit('linear', Dataset([[0.1, 0.2], [0.3, 0.4]], [1.0, 2.0]))


def test_outside_knots_is_rejected():
    spline = fit('linear', data)
    with pytest.raises(SplineDomainError):
        spline(0.0)
    with pytest.raises(SplineDomainError):
        spline(np.array([0.5, 0.99]))


def constrained_energy_minimizer(grid, knots, values, order):
    """Grid values minimizing the sum of squared order-th differences with the knot values held fixed"""
    D = np.diff(np.eye(grid.size), n=order, axis=0)
    fixed = np.array([np.argmin(np.abs(grid - k)) for k in knots])
    free = np.setdiff1d(np.arange(grid.size), fixed)
    h = np.zeros(grid.size)
    h[fixed] = values
    h[free] = np.linalg.lstsq(D[:, free], -D[:, fixed] @ h[fixed], rcond=None)[0]
    return h


def test_cubic_minimizes_curvature_energy():
    three = Dataset([[0.0], [1.0], [2.0]], [0.0, 1.0, 0.0], (0.0, 2.0))
    grid = np.linspace(0.0, 2.0, 401)
    h = constrained_energy_minimizer(grid, [0.0, 1.0, 2.0], three.Y, order=2)
    assert h[np.argmin(np.abs(grid - 0.5))] == pytest.approx(fit('natural_cubic', three)(0.5), abs=1e-4)
    assert fit('natural_cubic', three)(0.5) == pytest.approx(0.6875, abs=1e-12)


def test_linear_minimizes_slope_energy():
    spline = fit('linear', data)
    grid = np.linspace(0.05, 0.95, 361)
    h = constrained_energy_minimizer(grid, spline.Knots, spline.Values, order=1)
    assert np.allclose(h, spline(grid), atol=1e-6)
