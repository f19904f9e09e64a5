"""
ntk_oracle.py – Monte Carlo neural tangent kernel of the infinite width two-layer net and its kernel regression
"""

import logging
import numpy as np
from scipy.linalg import cho_solve, eigh
from lfp_lab.lfp_exceptions import InvalidConfigValue
from lfp_lab.datatypes.lfp_types import MonteCarloSpec
from lfp_lab.spectral_domain.activation_spectra import Activation
from lfp_lab.spectral_domain.param_model import ParamModel, sample_neurons
from lfp_lab.spectral_domain.spectral_core import as_points
from lfp_lab.lfp_subsystem.lfp_solver import Dataset, factor_spd
from typing import Callable, Optional, Tuple

min_samples = 1000
neuron_chunk = 2048


class KernelEstimate:
    """
    K(x, x') = E_q[s(z) s(z') + a^2 s'(z) s'(z') (x.x' + 1)] with z = w.x + b, z' = w.x' + b

    Neurons are drawn once, so every entry shares the sample set and K(x, x') = K(x', x) exactly. The
    (x.x' + 1) factor carries the w and b gradient terms.

        Attributes

        - Model -- Initial parameter distribution
        - Activation -- The activation
        - Mc -- Monte Carlo spec
        - Neurons -- The sample
    """

    def __init__(self, model: ParamModel, activation: Activation, mc: MonteCarloSpec):
        self.logger = logging.getLogger(__name__)
        if mc.samples < min_samples:
            raise InvalidConfigValue('samples', mc.samples, f'must be at least {min_samples}')
        self.Model = model
        self.Activation = activation
        self.Mc = mc
        self.Neurons = sample_neurons(model, mc.samples, mc.seed)
        self.logger.debug(f'NTK estimate with {mc.samples} neurons, seed {mc.seed}')

    def matrix(self, X, X2=None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Kernel matrix and the standard error of every entry

        :param X: (n, d) points
        :param X2: (p, d) points, X when omitted (the result is then symmetrized)
        :return: (mean, stderr), each (n, p)
        """
        d = self.Model.D
        X = as_points(X, d)
        same = X2 is None
        X2 = X if same else as_points(X2, d)
        a, w, b = self.Neurons
        act = self.Activation
        q = X @ X2.T + 1.0
        total = np.zeros((X.shape[0], X2.shape[0]))
        # Sum of squared per neuron terms, expanded so each piece is one matrix product
        sq_ss = np.zeros_like(total)
        sq_sd = np.zeros_like(total)
        sq_dd = np.zeros_like(total)
        for start in range(0, a.size, neuron_chunk):
            sl = slice(start, start + neuron_chunk)
            a2 = a[sl] ** 2
            z1 = X @ w[sl].T + b[sl]
            z2 = X2 @ w[sl].T + b[sl]
            s1, s2 = act.value(z1), act.value(z2)
            d1, d2 = act.derivative(z1), act.derivative(z2)
            ss = s1 @ s2.T
            dd = (d1 * a2) @ d2.T
            total += ss + dd * q
            sq_ss += (s1 ** 2) @ (s2 ** 2).T
            sq_sd += (s1 * d1 * a2) @ (s2 * d2).T
            sq_dd += (d1 ** 2 * a2 ** 2) @ (d2 ** 2).T
        m = a.size
        mean = total / m
        second = (sq_ss + 2 * q * sq_sd + q ** 2 * sq_dd) / m
        var = np.maximum(second - mean ** 2, 0.0) * m / (m - 1)
        stderr = np.sqrt(var / m)
        if same:
            mean = (mean + mean.T) / 2
            stderr = (stderr + stderr.T) / 2
        return mean, stderr

    def evaluate(self, x, x2) -> Tuple[float, float]:
        """(mean, stderr) of K(x, x2) for two single points"""
        mean, stderr = self.matrix(np.reshape(x, (1, -1)), np.reshape(x2, (1, -1)))
        return float(mean[0, 0]), float(stderr[0, 0])


def ntk_kernel(model: ParamModel, activation: Activation, x, x2, mc: MonteCarloSpec) -> Tuple[float, float]:
    """Monte Carlo NTK value at one pair of points and its standard error"""
    return KernelEstimate(model, activation, mc).evaluate(x, x2)


def _initial_values(f_ini: Optional[Callable], X: np.ndarray) -> np.ndarray:
    return np.zeros(X.shape[0]) if f_ini is None else np.asarray(f_ini(X), dtype=float).reshape(-1)


def kernel_predict(model: ParamModel, activation: Activation, data: Dataset, f_ini: Optional[Callable],
                   query_points, mc: MonteCarloSpec, kernel: Optional[KernelEstimate] = None) -> np.ndarray:
    """
    Long time limit of the kernel flow, f(x) = f_ini(x) - K(x, X) K(X, X)^-1 (f_ini(X) - Y)

    :param model: Initial parameter distribution
    :param activation: The activation
    :param data: Training set
    :param f_ini: Initial function taking (M, d) points, zero when None
    :param query_points: (M, d) points
    :param mc: Monte Carlo spec
    :param kernel: An existing estimate to reuse
    :return: (M,) predictions
    """
    kernel = KernelEstimate(model, activation, mc) if kernel is None else kernel
    query = as_points(query_points, data.d)
    gram, _ = kernel.matrix(data.X)
    factor = factor_spd(gram, what='NTK Gram matrix')
    u0 = _initial_values(f_ini, data.X) - data.Y
    cross, _ = kernel.matrix(query, data.X)
    return _initial_values(f_ini, query) - cross @ cho_solve(factor, u0)


def residual_flow(model: ParamModel, activation: Activation, data: Dataset, f_ini: Optional[Callable], t,
                  mc: MonteCarloSpec, kernel: Optional[KernelEstimate] = None) -> np.ndarray:
    """
    u(t) = expm(-K(X, X) t) u(0) on the training points, u(0) = f_ini(X) - Y

    Negative eigenvalues from Monte Carlo noise are clipped to 0.

    :param t: A time or an array of times
    :return: (n,) for a scalar t, else (len(t), n)
    """
    kernel = KernelEstimate(model, activation, mc) if kernel is None else kernel
    gram, _ = kernel.matrix(data.X)
    lam, V = eigh(gram)
    lam = np.clip(lam, 0.0, None)
    u0 = _initial_values(f_ini, data.X) - data.Y
    coeffs = V.T @ u0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    flows = np.array([V @ (np.exp(-lam * ti) * coeffs) for ti in ts])
    return flows[0] if np.ndim(t) == 0 else flows
