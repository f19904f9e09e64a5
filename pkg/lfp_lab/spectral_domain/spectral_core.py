"""
spectral_core.py – Truncated frequency lattice, Hermitian coefficient vectors and the FP-norm
"""

import json
import logging
import numpy as np
from lfp_lab.lfp_exceptions import (HermitianViolation, LatticeMismatch, InvalidZeroModePolicy,
                                    QuadratureTooCoarse, InvalidConfigValue)
from lfp_lab.datatypes.general_types import ZeroModePolicy
from lfp_lab.datatypes.lfp_types import MonteCarloSpec
from lfp_lab.spectral_domain.activation_spectra import Activation
from lfp_lab.spectral_domain.param_model import ParamModel, gamma_squared
from typing import Callable, Dict, Optional, Tuple

_logger = logging.getLogger(__name__)

hermitian_tol = 1e-10  # Relative to the largest coefficient
frozen_tol = 1e-12  # Coefficients below this (relative) on a frozen mode are roundoff
eval_chunk = 512  # Points per block in evaluate


class Lattice:
    """
    Integer frequency lattice {-K..K}^d scaled by the period L'

    Points are stored in lexicographic (C) order, so the point at index i has its mirror -k at N-1-i and
    the zero frequency sits in the centre. Indices above the centre form the positive half-lattice, one
    member of every +-k pair.

        Attributes

        - D -- Dimension
        - K -- Per axis cutoff
        - L_prime -- Period of the extended box
        - Zero_mode_policy -- How the constant mode is treated
        - Points -- (N, d) integer lattice points
        - Frequencies -- (N, d) Points / L_prime
        - Radii -- (N,) |k / L_prime|
    """

    def __init__(self, d: int, K: int, L_prime: float, zero_mode_policy=ZeroModePolicy.UNPENALIZED):
        if int(d) < 1:
            raise InvalidConfigValue('d', d, 'must be a positive integer')
        if int(K) < 1:
            raise InvalidConfigValue('K', K, 'must be a positive integer')
        if not L_prime > 0:
            raise InvalidConfigValue('L_prime', L_prime, 'must be positive')
        self.D = int(d)
        self.K = int(K)
        self.L_prime = float(L_prime)
        self.Zero_mode_policy = ZeroModePolicy(zero_mode_policy)

        axis = np.arange(-self.K, self.K + 1)
        grids = np.meshgrid(*([axis] * self.D), indexing='ij')
        self.Points = np.stack([g.reshape(-1) for g in grids], axis=1)
        self.Frequencies = self.Points / self.L_prime
        self.Radii = np.linalg.norm(self.Frequencies, axis=1)

    @property
    def size(self) -> int:
        return self.Points.shape[0]

    @property
    def centre(self) -> int:
        """Index of k = 0"""
        return (self.size - 1) // 2

    @property
    def positive_half(self) -> np.ndarray:
        """Indices of one representative of every +-k pair with k != 0"""
        return np.arange(self.centre + 1, self.size)

    @property
    def norm_mask(self) -> np.ndarray:
        """Modes that enter the FP-norm: every k != 0, plus k = 0 when it is penalized"""
        mask = np.ones(self.size, dtype=bool)
        if self.Zero_mode_policy != ZeroModePolicy.PENALIZED:
            mask[self.centre] = False
        return mask

    def index(self, k) -> int:
        """Position of lattice point k (a tuple or int for d=1)"""
        k = np.atleast_1d(np.asarray(k, dtype=int))
        if k.size != self.D or np.any(np.abs(k) > self.K):
            raise InvalidConfigValue('k', tuple(k), f'is not a point of {self}')
        idx = 0
        for ki in k:
            idx = idx * (2 * self.K + 1) + int(ki) + self.K
        return idx

    def key(self) -> Tuple[int, int, float]:
        return self.D, self.K, self.L_prime

    def check_compatible(self, other: 'Lattice'):
        if self.key() != other.key():
            raise LatticeMismatch(self, other)

    def with_cutoff(self, K: int) -> 'Lattice':
        """Same period and policy with a different cutoff"""
        return Lattice(self.D, K, self.L_prime, self.Zero_mode_policy)

    def to_dict(self) -> Dict:
        return {'d': self.D, 'K': self.K, 'L_prime': self.L_prime}

    def __repr__(self):
        return f'Lattice(d={self.D}, K={self.K}, L_prime={self.L_prime}, zero_mode={self.Zero_mode_policy.value})'


class SpectralCoefficients:
    """
    Hermitian symmetric coefficients phi(k) = F[h](k) of a real function h on a Lattice

    Construction checks phi(-k) = conj(phi(k)) and then symmetrizes exactly, so every instance and every
    result of +, - and scalar * represents a real valued function.

        Attributes

        - Lattice -- Where the coefficients live
        - Phi -- (N,) complex coefficients in lattice order
    """

    def __init__(self, lattice: Lattice, phi):
        phi = np.asarray(phi, dtype=complex).reshape(-1)
        if phi.size != lattice.size:
            raise InvalidConfigValue('phi', f'{phi.size} coefficients', f'does not fit {lattice}')
        mirror = np.conj(phi[::-1])
        scale = max(1.0, float(np.max(np.abs(phi)))) if phi.size else 1.0
        residue = float(np.max(np.abs(phi - mirror))) if phi.size else 0.0
        if residue > hermitian_tol * scale:
            raise HermitianViolation(residue)
        self.Lattice = lattice
        self.Phi = (phi + mirror) / 2

    @classmethod
    def zeros(cls, lattice: Lattice) -> 'SpectralCoefficients':
        return cls(lattice, np.zeros(lattice.size, dtype=complex))

    @classmethod
    def from_modes(cls, lattice: Lattice, modes: Dict) -> 'SpectralCoefficients':
        """
        Build from a few explicit modes, each mirrored onto -k with the conjugate value

        :param lattice: Target lattice
        :param modes: {k: phi(k)} with k an int (d=1) or a tuple
        """
        phi = np.zeros(lattice.size, dtype=complex)
        for k, value in modes.items():
            idx = lattice.index(k)
            phi[idx] = value
            phi[lattice.size - 1 - idx] = np.conj(value)
        return cls(lattice, phi)

    def _coerce(self, other: 'SpectralCoefficients') -> np.ndarray:
        self.Lattice.check_compatible(other.Lattice)
        return other.Phi

    def __add__(self, other: 'SpectralCoefficients') -> 'SpectralCoefficients':
        return SpectralCoefficients(self.Lattice, self.Phi + self._coerce(other))

    def __sub__(self, other: 'SpectralCoefficients') -> 'SpectralCoefficients':
        return SpectralCoefficients(self.Lattice, self.Phi - self._coerce(other))

    def __mul__(self, c: float) -> 'SpectralCoefficients':
        return SpectralCoefficients(self.Lattice, self.Phi * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> 'SpectralCoefficients':
        return SpectralCoefficients(self.Lattice, -self.Phi)

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.Phi))

    def to_json(self) -> str:
        """{lattice: {d, K, L_prime}, phi: [[k...], re, im]...}"""
        entries = [[[int(v) for v in k], float(p.real), float(p.imag)]
                   for k, p in zip(self.Lattice.Points, self.Phi)]
        return json.dumps({'lattice': self.Lattice.to_dict(), 'phi': entries})

    @classmethod
    def from_json(cls, text: str, zero_mode_policy=ZeroModePolicy.UNPENALIZED) -> 'SpectralCoefficients':
        doc = json.loads(text)
        spec = doc['lattice']
        lattice = Lattice(spec['d'], spec['K'], spec['L_prime'], zero_mode_policy)
        phi = np.zeros(lattice.size, dtype=complex)
        for k, re, im in doc['phi']:
            phi[lattice.index(k)] = complex(re, im)
        return cls(lattice, phi)

    def __repr__(self):
        return f'SpectralCoefficients({self.Lattice}, l2={self.l2_norm():.3e})'


class GammaWeight:
    """
    Frequency weight gamma^2 on a Lattice

    The centre entry is only meaningful under the penalized policy. A nonzero mode whose gamma^2
    underflowed to 0 is frozen: the flow never moves it and the FP-norm of anything living there is infinite.

        Attributes

        - Lattice -- Where the weight lives
        - Gamma2 -- (N,) nonnegative weights
        - Frozen -- (N,) True on norm bearing modes with gamma^2 == 0
    """

    def __init__(self, lattice: Lattice, gamma2):
        self.logger = logging.getLogger(__name__)
        gamma2 = np.asarray(gamma2, dtype=float).reshape(-1).copy()
        if gamma2.size != lattice.size:
            raise InvalidConfigValue('gamma2', f'{gamma2.size} values', f'does not fit {lattice}')
        policy = lattice.Zero_mode_policy
        if policy == ZeroModePolicy.PENALIZED:
            if not (np.isfinite(gamma2[lattice.centre]) and gamma2[lattice.centre] > 0):
                raise InvalidZeroModePolicy(policy.value, 'a positive finite gamma^2(0) is required')
        else:
            gamma2[lattice.centre] = 0.0
        mask = lattice.norm_mask
        if np.any(~np.isfinite(gamma2[mask])) or np.any(gamma2[mask] < 0):
            raise InvalidConfigValue('gamma2', 'nonfinite or negative', 'must be finite and nonnegative')
        self.Lattice = lattice
        self.Gamma2 = gamma2
        self.Frozen = mask & (gamma2 == 0)
        frozen = int(self.Frozen.sum())
        if frozen:
            self.logger.warning(f'gamma^2 underflows to 0 on {frozen} of {lattice.size} modes, they stay frozen')

    @property
    def gram_weights(self) -> np.ndarray:
        """gamma^2 on norm bearing modes, 0 elsewhere"""
        return np.where(self.Lattice.norm_mask, self.Gamma2, 0.0)

    def scaled(self, c: float) -> 'GammaWeight':
        return GammaWeight(self.Lattice, self.Gamma2 * float(c))

    def __repr__(self):
        return f'GammaWeight({self.Lattice})'


def fourier_matrix(lattice: Lattice, x) -> np.ndarray:
    """
    E[i, k] = exp(2 pi i (k / L') . x_i)

    :param lattice: The lattice
    :param x: (M, d) points, or (M,) for d=1
    :return: (M, N) complex matrix
    """
    x = as_points(x, lattice.D)
    return np.exp(2j * np.pi * (x @ lattice.Frequencies.T))


def as_points(x, d: int) -> np.ndarray:
    """Coerce x to an (M, d) float array"""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if d == 1 else x.reshape(1, -1)
    if x.shape[1] != d:
        raise InvalidConfigValue('x', f'shape {x.shape}', f'must have {d} columns')
    return x


def evaluate(phi: SpectralCoefficients, x):
    """
    h(x) = sum_k phi(k) exp(2 pi i (k/L') . x), real part

    :param phi: Coefficients
    :param x: A single point (d-vector or scalar for d=1) or (M, d) points
    :return: float for a single point, else (M,) array
    """
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and phi.Lattice.D > 1)
    pts = as_points(x, phi.Lattice.D)
    out = np.empty(pts.shape[0])
    worst = 0.0
    # Fixed block order keeps results reproducible
    for start in range(0, pts.shape[0], eval_chunk):
        vals = fourier_matrix(phi.Lattice, pts[start:start + eval_chunk]) @ phi.Phi
        out[start:start + eval_chunk] = vals.real
        if vals.size:
            worst = max(worst, float(np.max(np.abs(vals.imag))))
    if worst > 1e-8 * max(1.0, phi.l2_norm()):
        _logger.warning(f'Imaginary residue {worst:.3e} in evaluate')
    return float(out[0]) if single else out


def project(f: Callable, lattice: Lattice, quadrature_points: Optional[int] = None, origin=0.0) -> SpectralCoefficients:
    """
    Fourier coefficients of f over one period box by the periodic trapezoidal rule

    The rule is exact for trigonometric polynomials of degree < quadrature_points - K, so the default
    4K+4 points per axis recover band limited functions on the lattice to roundoff.

    :param f: Vectorized target taking an (M, d) array and returning (M,) values
    :param lattice: Target lattice
    :param quadrature_points: Points per axis, at least 4K+4
    :param origin: Lower corner of the period box (scalar or d-vector)
    :return: Coefficients on the lattice
    """
    minimum = 4 * lattice.K + 4
    q = minimum if quadrature_points is None else int(quadrature_points)
    if q < minimum:
        raise QuadratureTooCoarse(q, minimum)
    origin = np.broadcast_to(np.asarray(origin, dtype=float), (lattice.D,))
    j = np.arange(q)
    axes = [origin[a] + j * lattice.L_prime / q for a in range(lattice.D)]
    grids = np.meshgrid(*axes, indexing='ij')
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    values = np.asarray(f(pts), dtype=float).reshape((q,) * lattice.D)

    # Separable transform, one axis at a time
    k = np.arange(-lattice.K, lattice.K + 1)
    result = values.astype(complex)
    for a in range(lattice.D):
        dft = np.exp(-2j * np.pi * np.outer(k, axes[a]) / lattice.L_prime) / q
        result = np.tensordot(result, dft, axes=([0], [1]))
    return SpectralCoefficients(lattice, result.reshape(-1))


def fp_norm(phi: SpectralCoefficients, w: GammaWeight) -> float:
    """
    (sum over norm bearing k of |phi(k)|^2 / gamma^2(k))^(1/2)

    A semi-norm unless the zero mode is penalized. Mass on a frozen mode makes it infinite.

    :param phi: Coefficients
    :param w: Weight on the same lattice
    :return: The norm, possibly inf
    """
    phi.Lattice.check_compatible(w.Lattice)
    mask = w.Lattice.norm_mask
    scale = max(1.0, float(np.max(np.abs(phi.Phi))))
    frozen_mass = np.abs(phi.Phi[w.Frozen])
    if frozen_mass.size and np.max(frozen_mass) > frozen_tol * scale:
        _logger.warning('Coefficients on frozen modes, FP-norm is unbounded')
        return float('inf')
    live = mask & ~w.Frozen
    return float(np.sqrt(np.sum(np.abs(phi.Phi[live]) ** 2 / w.Gamma2[live])))


def gamma_l2_norm(w: GammaWeight) -> float:
    """(sum over norm bearing k of gamma^2(k))^(1/2)"""
    return float(np.sqrt(np.sum(w.gram_weights)))


def gamma_weight(lattice: Lattice, model: ParamModel, activation: Activation,
                 mc: Optional[MonteCarloSpec] = None, prefactor: bool = True,
                 zero_gamma2: Optional[float] = None) -> GammaWeight:
    """
    gamma^2 from an initial parameter distribution, evaluated once per distinct radius

    :param lattice: Target lattice, its dimension must match the model
    :param model: Initial parameter distribution
    :param activation: The activation
    :param mc: Monte Carlo spec when the model is not a point mass
    :param prefactor: False drops the sigma_b dependent constant (the minimizer does not depend on it)
    :param zero_gamma2: gamma^2(0), required by the penalized policy
    """
    if model.D != lattice.D:
        raise LatticeMismatch(f'ParamModel d={model.D}', lattice)
    gamma2 = np.zeros(lattice.size)
    nonzero = np.arange(lattice.size) != lattice.centre
    radii, inverse = np.unique(lattice.Radii[nonzero], return_inverse=True)
    gamma2[nonzero] = gamma_squared(model, activation, radii, mc=mc, prefactor=prefactor)[inverse]
    if lattice.Zero_mode_policy == ZeroModePolicy.PENALIZED:
        if zero_gamma2 is None:
            raise InvalidZeroModePolicy(lattice.Zero_mode_policy.value, 'zero_gamma2 must be given')
        gamma2[lattice.centre] = zero_gamma2
    return GammaWeight(lattice, gamma2)


def power_law_weight(lattice: Lattice, linear: float = 0.0, cubic: float = 0.0,
                     zero_gamma2: Optional[float] = None) -> GammaWeight:
    """
    gamma^2(xi) = linear / xi^2 + cubic / xi^4 on nonzero modes

    The two pure cases are the weights whose minimizers are the linear and the natural cubic spline.
    """
    if linear < 0 or cubic < 0 or linear + cubic <= 0:
        raise InvalidConfigValue('power law', (linear, cubic), 'needs nonnegative terms, not both zero')
    gamma2 = np.zeros(lattice.size)
    nonzero = np.arange(lattice.size) != lattice.centre
    xi = lattice.Radii[nonzero]
    gamma2[nonzero] = linear / xi ** 2 + cubic / xi ** 4
    if lattice.Zero_mode_policy == ZeroModePolicy.PENALIZED:
        if zero_gamma2 is None:
            raise InvalidZeroModePolicy(lattice.Zero_mode_policy.value, 'zero_gamma2 must be given')
        gamma2[lattice.centre] = zero_gamma2
    return GammaWeight(lattice, gamma2)
