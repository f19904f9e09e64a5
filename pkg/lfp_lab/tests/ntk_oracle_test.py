"""
ntk_oracle_test.py - Monte Carlo NTK, kernel regression and the residual flow
"""

import numpy as np
import pytest
from lfp_lab.datatypes.lfp_types import MonteCarloSpec
from lfp_lab.lfp_exceptions import InvalidConfigValue
from lfp_lab.spectral_domain.activation_spectra import get_activation
from lfp_lab.spectral_domain.param_model import regime_model
from lfp_lab.lfp_subsystem.lfp_solver import Dataset
from lfp_lab.oracle_subsystem.ntk_oracle import KernelEstimate, ntk_kernel, kernel_predict, residual_flow

relu = get_activation('relu')
model = regime_model(relu, 'mixed', 1)
mc = MonteCarloSpec(samples=20000, seed=3)
data = Dataset([[0.1], [0.35], [0.6], [0.9]], [0.5, -0.3, 0.8, 0.1])


@pytest.fixture(scope='module')
def kernel():
    return KernelEstimate(model, relu, mc)


def test_matrix_is_symmetric(kernel):
    K, stderr = kernel.matrix(np.linspace(0, 1, 7))
    assert np.array_equal(K, K.T)
    assert np.all(stderr >= 0)


def test_diagonal_matches_neuron_average(kernel):
    x = 0.42
    a, w, b = kernel.Neurons
    z = w[:, 0] * x + b
    expected = np.mean(relu.value(z) ** 2 + a ** 2 * relu.derivative(z) ** 2 * (x * x + 1))
    value, _ = kernel.evaluate(x, x)
    assert value >= 0
    assert value == pytest.approx(expected, rel=1e-10)


def test_pair_order_does_not_matter(kernel):
    forward, _ = kernel.evaluate(0.2, 0.7)
    backward, _ = kernel.evaluate(0.7, 0.2)
    assert forward == pytest.approx(backward, rel=1e-12)


def test_seeds_agree_within_error():
    big = 100000
    first = ntk_kernel(model, relu, 0.25, 0.8, MonteCarloSpec(samples=big, seed=1))
    second = ntk_kernel(model, relu, 0.25, 0.8, MonteCarloSpec(samples=big, seed=2))
    assert abs(first[0] - second[0]) <= 3 * np.hypot(first[1], second[1])


def test_too_few_samples():
    with pytest.raises(InvalidConfigValue):
        KernelEstimate(model, relu, MonteCarloSpec(samples=10, seed=0))


def test_prediction_interpolates(kernel):
    f = kernel_predict(model, relu, data, None, data.X, mc, kernel=kernel)
    assert np.allclose(f, data.Y, atol=1e-8)


def test_single_point_prediction(kernel):
    single = Dataset([[0.3]], [1.4])
    query = np.array([0.0, 0.5, 1.0])
    cross, _ = kernel.matrix(query, single.X)
    own, _ = kernel.evaluate(0.3, 0.3)
    f = kernel_predict(model, relu, single, None, query, mc, kernel=kernel)
    assert np.allclose(f, cross[:, 0] * 1.4 / own, rtol=1e-10)


def test_prediction_keeps_initial_function_when_it_fits(kernel):
    f_ini = lambda X: 2.0 * X[:, 0]
    fitted = Dataset(data.X, 2.0 * data.X[:, 0])
    query = np.linspace(0, 1, 5)
    assert np.allclose(kernel_predict(model, relu, fitted, f_ini, query, mc, kernel=kernel), 2.0 * query)


def test_residual_flow(kernel):
    assert np.allclose(residual_flow(model, relu, data, None, 0.0, mc, kernel=kernel), -data.Y)
    times = np.concatenate([[0.0], np.geomspace(1e-3, 1e6, 30)])
    flows = residual_flow(model, relu, data, None, times, mc, kernel=kernel)
    assert flows.shape == (times.size, data.n)
    norms = np.linalg.norm(flows, axis=1)
    assert np.all(np.diff(norms) <= 1e-12 * norms[0])
    assert norms[-1] <= 1e-6 * norms[0]
