"""
activation_spectra_test.py - Closed form transforms and per-neuron kernels
"""

import numpy as np
import pytest
from lfp_lab.datatypes.general_types import Part
from lfp_lab.lfp_exceptions import SpectralDomainError, UnknownActivation
from lfp_lab.spectral_domain.activation_spectra import (csch, get_activation, ft_regular, neuron_spectral_kernel,
                                                        w_term_coefficient)

relu = get_activation('relu')
tanh = get_activation('tanh')
xi = np.array([0.05, 0.3, 1.0, 2.5, 7.0])


def test_relu_value_transform():
    assert np.allclose(ft_regular(relu, Part.VALUE, xi), -1 / (4 * np.pi ** 2 * xi ** 2))


def test_tanh_transforms():
    expected_value = -1j * np.pi / np.sinh(np.pi ** 2 * xi)
    expected_derivative = 2 * np.pi ** 2 * xi / np.sinh(np.pi ** 2 * xi)
    assert np.allclose(ft_regular(tanh, Part.VALUE, xi), expected_value, rtol=1e-12, atol=0)
    assert np.allclose(ft_regular(tanh, Part.DERIVATIVE, xi), expected_derivative, rtol=1e-12, atol=0)


def test_csch_is_odd_and_does_not_overflow():
    assert csch(1.3) == pytest.approx(1 / np.sinh(1.3), rel=1e-14)
    assert csch(-1.3) == pytest.approx(-csch(1.3))
    assert csch(2000.0) == 0.0


@pytest.mark.parametrize('bad', [0.0, np.inf, np.nan])
def test_ft_regular_rejects_zero_and_non_finite(bad):
    with pytest.raises(SpectralDomainError):
        ft_regular(relu, Part.VALUE, bad)


def test_relu_kernel_closed_form():
    a, r, s = 0.7, 1.3, xi
    expected = r ** 3 / (16 * np.pi ** 4 * s ** 4) + a ** 2 * r / (4 * np.pi ** 2 * s ** 2)
    assert np.allclose(neuron_spectral_kernel(relu, a, r, s), expected, rtol=1e-13)


def test_relu_kernel_unit_arguments():
    expected = 1 / (16 * np.pi ** 4) + 1 / (4 * np.pi ** 2)
    assert neuron_spectral_kernel(relu, 1.0, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)


def test_tanh_kernel_without_output_weight_decays():
    s = np.array([1.0, 2.0, 4.0])
    k = neuron_spectral_kernel(tanh, 0.0, 1.0, s)
    assert np.allclose(k, np.pi ** 2 / np.sinh(np.pi ** 2 * s) ** 2, rtol=1e-12)
    assert k[-1] < 1e-30
    assert np.all(np.diff(k) < 0)


def test_kernel_requires_positive_r_and_s():
    with pytest.raises(SpectralDomainError):
        neuron_spectral_kernel(relu, 1.0, 0.0, 1.0)
    with pytest.raises(SpectralDomainError):
        neuron_spectral_kernel(relu, 1.0, 1.0, -1.0)


def test_w_term_coefficients():
    a, r, s, d = 0.8, 1.5, np.array([0.5, 2.0]), 2
    assert np.allclose(w_term_coefficient(relu, a, r, s, d), a ** 2 * r / (4 * np.pi ** 2 * s ** (d + 1)))
    expected = 4 * np.pi ** 4 * a ** 2 / r ** 3 * s ** (3 - d) / np.sinh(np.pi ** 2 * s / r) ** 2
    assert np.allclose(w_term_coefficient(tanh, a, r, s, d), expected, rtol=1e-12)
    assert w_term_coefficient(relu, 0.0, 1.0, 1.0, 1) == 0.0


def test_registry_lookup():
    assert get_activation('ReLU') is relu
    with pytest.raises(UnknownActivation):
        get_activation('softplus')


@pytest.mark.parametrize('act', [relu, tanh])
def test_kernel_is_even_in_output_weight(act):
    rng = np.random.default_rng(0)
    for a, r, s in zip(rng.normal(0, 2, 20), rng.uniform(0.1, 3, 20), rng.uniform(0.05, 4, 20)):
        assert neuron_spectral_kernel(act, a, r, s) == neuron_spectral_kernel(act, -a, r, s)


@pytest.mark.parametrize('act', [relu, tanh])
def test_kernel_is_squared_modulus_of_transforms(act):
    a, r = 0.6, 1.7
    s = np.geomspace(0.05, 8.0, 25)
    value = np.abs(ft_regular(act, Part.VALUE, s / r)) ** 2
    derivative = np.abs(ft_regular(act, Part.DERIVATIVE, s / r)) ** 2
    assert np.allclose(neuron_spectral_kernel(act, a, r, s), (value + a ** 2 * derivative) / r, rtol=1e-12, atol=0)


@pytest.mark.parametrize('act, a', [(relu, 0.0), (relu, 0.8), (tanh, 0.8)])
def test_kernel_strictly_decays(act, a):
    s = np.geomspace(1e-2, 20.0, 300)
    k = neuron_spectral_kernel(act, a, 1.0, s)
    assert np.all(k > 0)
    assert np.all(np.diff(k) < 0)


def test_tanh_decays_faster_than_relu():
    assert neuron_spectral_kernel(tanh, 1.0, 1.0, 20.0) < neuron_spectral_kernel(relu, 1.0, 1.0, 20.0)
