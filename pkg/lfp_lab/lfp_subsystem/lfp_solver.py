"""
lfp_solver.py – Long time limits of the spectral flow: minimum FP-norm interpolation and its ridge relaxation
"""

import logging
import numpy as np
from scipy.linalg import cho_factor, cho_solve, expm, LinAlgError
from lfp_lab.lfp_exceptions import (InvalidDataset, IllConditionedGram, FactorizationFailed,
                                    RankDeficientSystem, InvalidConfigValue)
from lfp_lab.datatypes.general_types import ZeroModePolicy
from lfp_lab.datatypes.lfp_types import EquivalenceResult
from lfp_lab.spectral_domain.spectral_core import (Lattice, SpectralCoefficients, GammaWeight, fourier_matrix,
                                                   evaluate, as_points)
from typing import Callable, Optional, Tuple, Union

_logger = logging.getLogger(__name__)

condition_limit = 1e12
jitter_factor = 1e-12


class Dataset:
    """
    Training set S = {(x_i, y_i)} inside a box domain [lo, hi]^d

        Attributes

        - X -- (n, d) points, pairwise distinct
        - Y -- (n,) labels
        - Domain -- (lo, hi) bounds shared by every axis
    """

    def __init__(self, X, Y, domain: Tuple[float, float] = (0.0, 1.0)):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        Y = np.asarray(Y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] < 1:
            raise InvalidDataset('at least one point is required')
        if X.shape[0] != Y.size:
            raise InvalidDataset(f'{X.shape[0]} points but {Y.size} labels')
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvalidDataset('points and labels must be finite')
        lo, hi = float(domain[0]), float(domain[1])
        if not hi > lo:
            raise InvalidDataset(f'empty domain [{lo}, {hi}]')
        if np.any(X < lo) or np.any(X > hi):
            raise InvalidDataset(f'points outside the domain [{lo}, {hi}]^{X.shape[1]}')
        _, first, counts = np.unique(X, axis=0, return_index=True, return_counts=True)
        if np.any(counts > 1):
            dup = X[first[counts > 1][0]]
            labels = Y[np.all(X == dup, axis=1)]
            what = 'conflicting labels' if np.ptp(labels) > 0 else 'a repeated point'
            raise InvalidDataset(f'{what} at x={dup.tolist()}')
        self.X = X
        self.Y = Y
        self.Domain = (lo, hi)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __repr__(self):
        return f'Dataset(n={self.n}, d={self.d}, domain={self.Domain})'


def factor_spd(G: np.ndarray, what: str = 'Gram matrix', limit: float = condition_limit):
    """
    Cholesky factor of a symmetric positive definite matrix

    A jitter of 1e-12 trace/n is added when the plain factorization fails. The condition number is
    estimated from the factor diagonal.

    :param G: Symmetric matrix
    :param what: Name used in messages
    :param limit: Largest acceptable condition estimate
    :return: cho_factor result
    """
    n = G.shape[0]
    try:
        factor = cho_factor(G, lower=True)
    except LinAlgError:
        jitter = jitter_factor * np.trace(G) / n
        _logger.warning(f'Factorization of the {what} failed, retrying with jitter {jitter:.3e}')
        try:
            factor = cho_factor(G + jitter * np.eye(n), lower=True)
        except LinAlgError:
            raise FactorizationFailed(what, jitter) from None
    diag = np.abs(np.diag(factor[0]))
    condition = float((diag.max() / diag.min()) ** 2) if diag.min() > 0 else float('inf')
    if condition > limit:
        raise IllConditionedGram(condition, limit)
    _logger.debug(f'{what} condition estimate {condition:.3e}')
    return factor


def _points(data: Union[Dataset, np.ndarray], d: int) -> np.ndarray:
    return data.X if isinstance(data, Dataset) else as_points(data, d)


def gram_matrix(data: Union[Dataset, np.ndarray], w: GammaWeight) -> np.ndarray:
    """
    G_ij = sum_k gamma^2(k) exp(2 pi i (k/L') . (x_i - x_j)) over norm bearing modes

    :param data: A Dataset or raw (n, d) points (coincident points allowed)
    :param w: Frequency weight
    :return: (n, n) real symmetric positive semidefinite matrix
    """
    E = fourier_matrix(w.Lattice, _points(data, w.Lattice.D))
    G = ((E * w.gram_weights) @ E.conj().T).real
    return (G + G.T) / 2


def _initial(phi_ini: Optional[SpectralCoefficients], w: GammaWeight) -> SpectralCoefficients:
    if phi_ini is None:
        return SpectralCoefficients.zeros(w.Lattice)
    phi_ini.Lattice.check_compatible(w.Lattice)
    return phi_ini


def interpolation_residual(phi: SpectralCoefficients, data: Dataset) -> float:
    """max_i |h(x_i) - y_i|"""
    return float(np.max(np.abs(evaluate(phi, data.X) - data.Y)))


def solve_constrained(data: Dataset, w: GammaWeight, phi_ini: Optional[SpectralCoefficients] = None,
                      limit: float = condition_limit) -> SpectralCoefficients:
    """
    Minimum FP-norm interpolant phi = phi_ini + gamma^2 E* c with G c = Y - h_ini(X)

    When the zero mode is unpenalized it is a free Lagrange direction: with r = Y - h_ini(X)

        c0 = (1' G^-1 r) / (1' G^-1 1),  c = G^-1 (r - c0 1),  delta phi(0) = c0

    so a single training point is fitted by a constant.

    :param data: Training set
    :param w: Frequency weight
    :param phi_ini: Initial coefficients, zero when omitted
    :param limit: Largest acceptable Gram condition estimate
    :return: The interpolating coefficients
    """
    phi_ini = _initial(phi_ini, w)
    lattice = w.Lattice
    E = fourier_matrix(lattice, data.X)
    g = w.gram_weights
    G = ((E * g) @ E.conj().T).real
    G = (G + G.T) / 2
    r = data.Y - evaluate(phi_ini, data.X)
    factor = factor_spd(G, limit=limit)

    c0 = 0.0
    if lattice.Zero_mode_policy == ZeroModePolicy.UNPENALIZED:
        ones = np.ones(data.n)
        g_r = cho_solve(factor, r)
        g_1 = cho_solve(factor, ones)
        c0 = float(ones @ g_r / (ones @ g_1))
        c = g_r - c0 * g_1
    else:
        c = cho_solve(factor, r)
    delta = g * (E.conj().T @ c)
    delta[lattice.centre] += c0
    phi = phi_ini + SpectralCoefficients(lattice, delta)

    residual = interpolation_residual(phi, data)
    if residual > 1e-8 * (1 + np.max(np.abs(data.Y))):
        _logger.warning(f'Constrained solution misses the data by {residual:.3e}')
    return phi


def _ridge_columns(lattice: Lattice, w: GammaWeight):
    """Half lattice modes kept by the ridge path and their inverse weights W^-1 for sin and cos columns"""
    half = lattice.positive_half
    live = half[~w.Frozen[half]]
    inv = 1.0 / (2.0 * w.Gamma2[live])
    return live, inv


def solve_ridge(data: Dataset, w: GammaWeight, eps: float = 1e-6,
                phi_ini: Optional[SpectralCoefficients] = None) -> SpectralCoefficients:
    """
    Ridge relaxation in the real sin/cos basis

    Columns are sin(2 pi k.x/L') then cos(2 pi k.x/L') for the positive half-lattice, then the constant.
    theta = [E'E + eps W^-1]^-1 E' r with W^-1 = 1/(2 gamma^2) for k != 0 and, for the constant column,
    1/gamma^2(0) when penalized or 0 (plus 1e-12 jitter) when unpenalized. An excluded zero mode has no
    column. Back in the complex basis phi(k) = (b - i a)/2 and phi(0) = b0.

    :param data: Training set
    :param w: Frequency weight
    :param eps: Ridge parameter, > 0
    :param phi_ini: Initial coefficients, zero when omitted
    :return: Ridge solution
    """
    if not eps > 0:
        raise InvalidConfigValue('eps', eps, 'must be positive')
    phi_ini = _initial(phi_ini, w)
    lattice = w.Lattice
    live, inv = _ridge_columns(lattice, w)
    angle = 2 * np.pi * (data.X @ lattice.Frequencies[live].T)
    columns = [np.sin(angle), np.cos(angle)]
    penalty = [inv, inv]
    policy = lattice.Zero_mode_policy
    if policy != ZeroModePolicy.EXCLUDED:
        columns.append(np.ones((data.n, 1)))
        zero_inv = 1.0 / w.Gamma2[lattice.centre] if policy == ZeroModePolicy.PENALIZED else jitter_factor / eps
        penalty.append(np.array([zero_inv]))
    design = np.hstack(columns)
    penalty = np.concatenate(penalty)
    r = data.Y - evaluate(phi_ini, data.X)

    A = design.T @ design + eps * np.diag(penalty)
    # Jacobi scaling before factorizing, the diagonal spans many decades
    s = 1.0 / np.sqrt(np.diag(A))
    try:
        factor = cho_factor(A * s[:, None] * s[None, :], lower=True)
    except LinAlgError:
        raise FactorizationFailed('ridge normal matrix', 0.0) from None
    theta = s * cho_solve(factor, s * (design.T @ r))

    m = live.size
    a, b = theta[:m], theta[m:2 * m]
    delta = np.zeros(lattice.size, dtype=complex)
    delta[live] = (b - 1j * a) / 2
    delta[lattice.size - 1 - live] = (b + 1j * a) / 2
    if policy != ZeroModePolicy.EXCLUDED:
        delta[lattice.centre] = theta[-1]
    return phi_ini + SpectralCoefficients(lattice, delta)


def equivalence_check_matrix(P, Y, theta_ini, T: Optional[float] = None, weights=None) -> EquivalenceResult:
    """
    Long time gradient flow of a linear least squares problem versus its closed form minimizer

    The flow d theta/dt = W P'(Y - P theta) is affine in theta. Appending a constant 1 to the state makes it
    linear, z' = A z with A = [[-W P'P, W P'Y], [0, 0]], so theta(T) is read off expm(A T) [theta_ini; 1].
    That integration never inverts anything. The closed form is theta_ini + W P'(P W P')^-1 r0, the minimizer
    of the W^-1 weighted distance to theta_ini. W = I unless weights are given.

    :param P: (n, m) matrix of full row rank
    :param Y: (n,) targets
    :param theta_ini: (m,) starting point
    :param T: Horizon, defaults to 50 / lambda_min(P W P')
    :param weights: Optional positive (m,) diagonal of W
    :return: EquivalenceResult(theta_ode, theta_closed, gap)
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Y = np.asarray(Y, dtype=float).reshape(-1)
    theta_ini = np.asarray(theta_ini, dtype=float).reshape(-1)
    n, m = P.shape
    rank = int(np.linalg.matrix_rank(P))
    if rank < n:
        raise RankDeficientSystem(rank, n)
    W = np.ones(m) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if np.any(W <= 0):
        raise InvalidConfigValue('weights', 'nonpositive entries', 'must be positive')

    WPt = W[:, None] * P.T
    M = P @ WPt
    M = (M + M.T) / 2
    if T is None:
        T = 50.0 / np.linalg.eigvalsh(M)[0]

    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = -WPt @ P
    A[:m, m] = WPt @ Y
    theta_ode = (expm(A * T) @ np.append(theta_ini, 1.0))[:m]

    r0 = Y - P @ theta_ini
    theta_closed = theta_ini + WPt @ np.linalg.solve(M, r0)
    return EquivalenceResult(theta_ode=theta_ode, theta_closed=theta_closed,
                             gap=float(np.linalg.norm(theta_ode - theta_closed)))


def lattice_drift(data: Dataset, make_weight: Callable[[Lattice], GammaWeight], lattice: Lattice,
                  points: int = 512) -> float:
    """
    Sup distance on the domain between the constrained solutions on lattices with cutoff K and 2K

    :param data: Training set
    :param make_weight: Builds the weight for a given lattice
    :param lattice: The K lattice
    :param points: Check points per axis (d=1) or per axis of a grid (d>1, capped at 64)
    :return: Sup distance
    """
    coarse = solve_constrained(data, make_weight(lattice))
    fine = solve_constrained(data, make_weight(lattice.with_cutoff(2 * lattice.K)))
    lo, hi = data.Domain
    per_axis = points if data.d == 1 else min(points, 64)
    axis = np.linspace(lo, hi, per_axis)
    grids = np.meshgrid(*([axis] * data.d), indexing='ij')
    grid = np.stack([g.reshape(-1) for g in grids], axis=1)
    drift = float(np.max(np.abs(evaluate(coarse, grid) - evaluate(fine, grid))))
    _logger.info(f'Solution drift between K={lattice.K} and K={2 * lattice.K}: {drift:.3e}')
    return drift
