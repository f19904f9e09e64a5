"""
activation_spectra.py – Closed form Fourier transforms of activations and the per-neuron spectral kernels

Convention: F[f](xi) = integral of f(x) exp(-2 pi i x xi) dx. Only the regular part of each transform is
returned. Delta terms sitting at xi = 0 are dropped here and the zero mode is governed by the lattice's
ZeroModePolicy instead.
"""

import numpy as np
from lfp_lab.lfp_exceptions import SpectralDomainError, UnknownActivation
from lfp_lab.datatypes.general_types import Part
from typing import Dict

PI2 = np.pi ** 2


def csch(x):
    """
    Hyperbolic cosecant without overflow for large |x|

    sinh overflows near 710, so we use csch(x) = 2 e^-x / (1 - e^-2x) on |x| and restore the sign.
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    with np.errstate(divide='ignore'):
        return np.sign(x) * 2.0 * np.exp(-ax) / -np.expm1(-2.0 * ax)


def _check_positive(quantity: str, value):
    v = np.asarray(value, dtype=float)
    if np.any(~(v > 0)):
        raise SpectralDomainError(quantity, value)


class Activation:
    """
    An activation function together with everything the spectral formulas need from it.

    A new kind is added by subclassing and supplying the four functions below.

        Attributes

        - Name -- Registry name
    """
    Name = None

    def value(self, z):
        raise NotImplementedError

    def derivative(self, z):
        raise NotImplementedError

    def ft_value(self, xi):
        """Regular part of F[sigma] at nonzero xi"""
        raise NotImplementedError

    def ft_derivative(self, xi):
        """Regular part of F[sigma'] at nonzero xi"""
        raise NotImplementedError

    def __repr__(self):
        return f'Activation({self.Name})'


class ReLU(Activation):
    Name = 'relu'

    def value(self, z):
        return np.maximum(z, 0.0)

    def derivative(self, z):
        # Subgradient at the kink is 0
        return (np.asarray(z) > 0).astype(float)

    def ft_value(self, xi):
        xi = np.asarray(xi, dtype=float)
        return (-1.0 / (4.0 * PI2 * xi ** 2)).astype(complex)

    def ft_derivative(self, xi):
        # Heaviside
        xi = np.asarray(xi, dtype=float)
        return 1.0 / (2j * np.pi * xi)


class Tanh(Activation):
    Name = 'tanh'

    def value(self, z):
        return np.tanh(z)

    def derivative(self, z):
        return 1.0 / np.cosh(np.clip(z, -350.0, 350.0)) ** 2

    def ft_value(self, xi):
        xi = np.asarray(xi, dtype=float)
        return -1j * np.pi * csch(PI2 * xi)

    def ft_derivative(self, xi):
        # sech^2
        xi = np.asarray(xi, dtype=float)
        return (2.0 * PI2 * xi * csch(PI2 * xi)).astype(complex)


activations: Dict[str, Activation] = {'relu': ReLU(), 'tanh': Tanh()}


def get_activation(name: str) -> Activation:
    """Look up a registered activation by name (case insensitive)"""
    try:
        return activations[name.lower()]
    except (KeyError, AttributeError):
        raise UnknownActivation(name) from None


def ft_regular(activation: Activation, part: Part, xi):
    """
    Regular (non-distributional) part of the Fourier transform of sigma or sigma'

    :param activation: The activation
    :param part: Part.VALUE for sigma, Part.DERIVATIVE for sigma'
    :param xi: Nonzero frequency (scalar or array)
    :return: Complex transform value(s)
    """
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr == 0) or np.any(~np.isfinite(xi_arr)):
        raise SpectralDomainError('|xi|', xi)
    if part == Part.VALUE:
        return activation.ft_value(xi_arr)
    return activation.ft_derivative(xi_arr)


def neuron_spectral_kernel(activation: Activation, a, r, s):
    """
    (1/r) F[g1](s/r) . F[g1](-s/r) with g1 = (sigma, a sigma')

    For these real activations F(-eta) = conj(F(eta)) so the product is real and positive.
    a, r and s broadcast against each other.

    :param activation: The activation
    :param a: Output weight(s)
    :param r: Norm(s) of the input weight, r > 0
    :param s: Frequency magnitude(s), s > 0
    :return: Kernel value(s)
    """
    _check_positive('r', r)
    _check_positive('s', s)
    a = np.asarray(a, dtype=float)
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    eta = s / r
    value_term = (activation.ft_value(eta) * activation.ft_value(-eta)).real
    derivative_term = (activation.ft_derivative(eta) * activation.ft_derivative(-eta)).real
    return (value_term + a ** 2 * derivative_term) / r


def w_term_coefficient(activation: Activation, a, r, s, d: int):
    """
    Scalar diffusion coefficient of the divergence term that comes from the evolution of w

    (1 / (r s^(d-1))) F[g2](s/r) F[g2](-s/r) with g2 = a sigma'. Reported only, the dynamics never use it.
    """
    _check_positive('r', r)
    _check_positive('s', s)
    _check_positive('d', d)
    a = np.asarray(a, dtype=float)
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    eta = s / r
    g2 = a ** 2 * (activation.ft_derivative(eta) * activation.ft_derivative(-eta)).real
    return g2 / (r * s ** (d - 1))
