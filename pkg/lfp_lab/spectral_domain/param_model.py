"""
param_model.py – Initial parameter distribution of a wide two-layer net and the frequency weight it induces
"""

import logging
import numpy as np
from scipy.special import gamma as gamma_fn
from lfp_lab.lfp_exceptions import SpectralDomainError, MonteCarloSpecMissing, InvalidConfigValue
from lfp_lab.datatypes.lfp_types import MonteCarloSpec, Neurons
from lfp_lab.spectral_domain.activation_spectra import Activation, neuron_spectral_kernel
from typing import Optional, Tuple

_logger = logging.getLogger(__name__)

# Chunk of Monte Carlo samples reduced at a time, fixed so results do not depend on memory
mc_chunk = 4096

# Default regimes (a^2, r) keyed by activation then regime name
# The spectral shape depends on a^2 / r^2 only. r = sigma_b puts the bias spread in input units, sigma_b / r, at 1.
default_regimes = {
    'relu': {'r_dominant': (1e-4, 10.0), 'a_dominant': (1e6, 10.0), 'mixed': (100.0, 10.0)},
    'tanh': {'r_dominant': (1e-2, 10.0), 'a_dominant': (400.0, 10.0), 'mixed': (100.0, 10.0)},
}
default_sigma_b = 10.0


class PointMass:
    """A degenerate distribution at Value"""

    def __init__(self, value: float):
        self.Value = float(value)

    is_point_mass = True

    @property
    def second_moment(self) -> float:
        return self.Value ** 2

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return np.full(m, self.Value)

    def __repr__(self):
        return f'PointMass({self.Value})'


class Gaussian:
    """Normal distribution N(Mean, Std^2)"""

    def __init__(self, mean: float, std: float):
        self.Mean = float(mean)
        self.Std = float(std)

    is_point_mass = False

    @property
    def second_moment(self) -> float:
        return self.Mean ** 2 + self.Std ** 2

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return rng.normal(self.Mean, self.Std, size=m)

    def __repr__(self):
        return f'Gaussian({self.Mean}, {self.Std})'


class RadialGaussian:
    """
    Distribution of r = |w| when w ~ N(0, Std^2 I_d)

    The density comes from folding the radially symmetric w density over the sphere:
    rho_r(r) = 2 pi^(d/2) / Gamma(d/2) * rho_w(r e_1) * r^(d-1)
    """

    def __init__(self, std: float, d: int):
        self.Std = float(std)
        self.D = int(d)

    is_point_mass = False

    @property
    def second_moment(self) -> float:
        return self.D * self.Std ** 2

    def w_density(self, r):
        """rho_w evaluated at r e_1"""
        r = np.asarray(r, dtype=float)
        return np.exp(-r ** 2 / (2 * self.Std ** 2)) / (2 * np.pi * self.Std ** 2) ** (self.D / 2)

    def density(self, r):
        r = np.asarray(r, dtype=float)
        sphere = 2 * np.pi ** (self.D / 2) / gamma_fn(self.D / 2)
        return sphere * self.w_density(r) * r ** (self.D - 1)

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return self.Std * np.sqrt(rng.chisquare(self.D, size=m))

    def __repr__(self):
        return f'RadialGaussian({self.Std}, d={self.D})'


class ParamModel:
    """
    Initial distribution of q = (a, w, b) for a two-layer net.

    a, w and b are independent by construction since each has its own distribution. The direction of w is
    uniform on the sphere, only its norm r has a distribution. b ~ N(0, Sigma_b^2).

        Attributes

        - A_dist -- Distribution of the output weight a
        - R_dist -- Distribution of r = |w|
        - Sigma_b -- Standard deviation of the bias
        - D -- Input dimension
    """

    def __init__(self, a_dist, r_dist, sigma_b: float, d: int):
        if not sigma_b > 0:
            raise InvalidConfigValue('sigma_b', sigma_b, 'must be positive')
        if int(d) < 1:
            raise InvalidConfigValue('d', d, 'must be a positive integer')
        if r_dist.is_point_mass and not r_dist.Value > 0:
            raise InvalidConfigValue('r', r_dist.Value, 'must be positive')
        self.A_dist = a_dist
        self.R_dist = r_dist
        self.Sigma_b = float(sigma_b)
        self.D = int(d)

    @property
    def a2(self) -> float:
        """<a^2>"""
        return self.A_dist.second_moment

    @property
    def r2(self) -> float:
        """<r^2>"""
        return self.R_dist.second_moment

    @property
    def is_point_mass(self) -> bool:
        return self.A_dist.is_point_mass and self.R_dist.is_point_mass

    def prefactor(self, s) -> np.ndarray:
        """Gamma(d/2) / (2 sqrt(2) pi^((d+1)/2) sigma_b s^(d-1))"""
        d = self.D
        s = np.asarray(s, dtype=float)
        return gamma_fn(d / 2) / (2 * np.sqrt(2) * np.pi ** ((d + 1) / 2) * self.Sigma_b * s ** (d - 1))

    def __repr__(self):
        return f'ParamModel(a={self.A_dist}, r={self.R_dist}, sigma_b={self.Sigma_b}, d={self.D})'


def regime_model(activation: Activation, regime: str, d: int, sigma_b: float = default_sigma_b) -> ParamModel:
    """Point mass ParamModel for one of the named regimes"""
    try:
        a2, r = default_regimes[activation.Name][regime]
    except KeyError:
        raise InvalidConfigValue('regime', regime, f'is not one of {sorted(default_regimes["relu"])}') from None
    return ParamModel(a_dist=PointMass(np.sqrt(a2)), r_dist=PointMass(r), sigma_b=sigma_b, d=d)


def gamma_squared_estimate(model: ParamModel, activation: Activation, s,
                           mc: Optional[MonteCarloSpec] = None, prefactor: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    gamma^2(s) and its Monte Carlo standard error

    The expectation over (a, r) is exact for point masses (standard error 0), otherwise it is averaged over
    mc.samples draws in fixed size chunks so the result depends only on the seed and sample count.

    :param model: Initial parameter distribution
    :param activation: The activation
    :param s: Frequency magnitude(s), s > 0
    :param mc: Monte Carlo spec, required unless both a and r are point masses
    :param prefactor: False drops the constant Gamma(d/2)/(2 sqrt 2 pi^((d+1)/2) sigma_b)
    :return: (value, standard error) with the shape of s
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 0)):
        raise SpectralDomainError('s', s)
    radial = s_arr ** (1 - model.D)
    scale = model.prefactor(s_arr) if prefactor else radial

    if model.is_point_mass:
        kernel = neuron_spectral_kernel(activation, model.A_dist.Value, model.R_dist.Value, s_arr)
        return scale * kernel, np.zeros_like(s_arr)

    if mc is None:
        raise MonteCarloSpecMissing('a or r distribution')
    _logger.debug(f'Monte Carlo gamma^2 over {s_arr.size} frequencies with {mc.samples} samples, seed {mc.seed}')
    rng = np.random.default_rng(mc.seed)
    a = model.A_dist.sample(rng, mc.samples)
    r = model.R_dist.sample(rng, mc.samples)
    flat = s_arr.reshape(-1)
    total = np.zeros_like(flat)
    total_sq = np.zeros_like(flat)
    for start in range(0, mc.samples, mc_chunk):
        k = neuron_spectral_kernel(activation, a[start:start + mc_chunk, None], r[start:start + mc_chunk, None],
                                   flat[None, :])
        total += k.sum(axis=0)
        total_sq += (k ** 2).sum(axis=0)
    mean = total / mc.samples
    var = np.maximum(total_sq / mc.samples - mean ** 2, 0.0) * mc.samples / max(mc.samples - 1, 1)
    stderr = np.sqrt(var / mc.samples)
    return scale * mean.reshape(s_arr.shape), scale * stderr.reshape(s_arr.shape)


def gamma_squared(model: ParamModel, activation: Activation, s, mc: Optional[MonteCarloSpec] = None,
                  prefactor: bool = True):
    """
    Frequency weight gamma^2(s) = prefactor(s) * E_{a,r}[neuron_spectral_kernel(a, r, s)]

    See gamma_squared_estimate for the parameters
    """
    value, _ = gamma_squared_estimate(model, activation, s, mc=mc, prefactor=prefactor)
    return value


def sample_neurons(model: ParamModel, m: int, seed: int) -> Neurons:
    """
    Draw m neurons from the initial distribution

    w = r * u with u uniform on the unit sphere (normalized Gaussian), b ~ N(0, sigma_b^2)

    :param model: Initial parameter distribution
    :param m: Number of neurons
    :param seed: Seed, the same seed always yields the same neurons
    :return: Neurons(a, w, b)
    """
    if int(m) < 1:
        raise InvalidConfigValue('m', m, 'must be at least 1')
    rng = np.random.default_rng(seed)
    a = model.A_dist.sample(rng, m)
    r = model.R_dist.sample(rng, m)
    u = rng.standard_normal((m, model.D))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    b = rng.normal(0.0, model.Sigma_b, size=m)
    return Neurons(a=a, w=r[:, None] * u, b=b)
