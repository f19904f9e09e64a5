"""
generalization_bounds.py – Rademacher complexity of FP-norm balls and a priori risk bounds
"""

import itertools
import logging
import numpy as np
from lfp_lab.lfp_exceptions import (MissingZeroModeBound, EnumerationTooLarge, NyquistViolation,
                                    InvalidConfigValue)
from lfp_lab.datatypes.general_types import ZeroModePolicy
from lfp_lab.datatypes.lfp_types import BoundReport, SweepRow, NetSpec
from lfp_lab.spectral_domain.spectral_core import (SpectralCoefficients, GammaWeight, project, evaluate, fp_norm,
                                                   gamma_l2_norm)
from lfp_lab.lfp_subsystem.lfp_solver import Dataset, gram_matrix, solve_constrained
from lfp_lab.oracle_subsystem.nn_reference import init_net, train_gd
from typing import Callable, List, Optional, Tuple, Union

_logger = logging.getLogger(__name__)

cases = ('all_modes', 'zero_excluded')
enumeration_limit = 12
sup_points_per_axis = 2 ** 12
sup_points_total = 2 ** 16


def case_for(w: GammaWeight) -> str:
    """zero_excluded when the constant mode is free, all_modes otherwise"""
    if w.Lattice.Zero_mode_policy == ZeroModePolicy.UNPENALIZED:
        return 'zero_excluded'
    return 'all_modes'


def _check_case(case: str, c0: Optional[float]):
    if case not in cases:
        raise InvalidConfigValue('case', case, f'must be one of {cases}')
    if case == 'zero_excluded' and c0 is None:
        raise MissingZeroModeBound()


def rademacher_bound(Q: float, w: GammaWeight, n: int, case: str = 'all_modes', c0: Optional[float] = None) -> float:
    """
    Q |gamma|_l2 / sqrt(n), plus c0 / sqrt(n) when the zero mode is bounded separately

    :param Q: Radius of the FP-norm ball
    :param w: Frequency weight
    :param n: Sample count
    :param case: 'all_modes' or 'zero_excluded'
    :param c0: Bound on the zero mode, zero_excluded only
    """
    _check_case(case, c0)
    if n < 1:
        raise InvalidConfigValue('n', n, 'must be at least 1')
    value = Q * gamma_l2_norm(w) / np.sqrt(n)
    if case == 'zero_excluded':
        value += c0 / np.sqrt(n)
    return float(value)


def rademacher_exact(X, Q: float, w: GammaWeight, c0: Optional[float] = None) -> float:
    """
    Exact empirical Rademacher complexity of the FP-norm ball of radius Q on the sample X

    Cauchy-Schwarz is attained on the ball, so the supremum for a sign vector t is Q sqrt(t' G t) and the
    value is the average of that over all 2^n sign vectors, divided by n. With c0 the class also carries a
    constant mode bounded by c0, which adds c0 mean|sum t| / n.

    :param X: (n, d) points, n <= 12
    :param Q: Ball radius
    :param w: Frequency weight
    :param c0: Optional zero mode bound
    """
    G = gram_matrix(X, w)
    n = G.shape[0]
    if n > enumeration_limit:
        raise EnumerationTooLarge(n, enumeration_limit)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    quad = np.einsum('ti,ij,tj->t', signs, G, signs)
    value = Q * np.mean(np.sqrt(np.clip(quad, 0.0, None))) / n
    if c0 is not None:
        value += c0 * np.mean(np.abs(signs.sum(axis=1))) / n
    return float(value)


def risk_factor(n: int, delta: float) -> float:
    """2/sqrt(n) + 4 sqrt(2 log(4/delta) / n)"""
    if not 0 < delta < 1:
        raise InvalidConfigValue('delta', delta, 'must lie in (0, 1)')
    return float(2 / np.sqrt(n) + 4 * np.sqrt(2 * np.log(4 / delta) / n))


def sup_grid(domain: Tuple[float, float], d: int, per_axis: Optional[int] = None) -> np.ndarray:
    """Dense grid on the domain box for sup norms, at most 2^16 points in total when d >= 2"""
    if per_axis is None:
        per_axis = sup_points_per_axis if d == 1 else int(np.floor(sup_points_total ** (1 / d)))
    axis = np.linspace(domain[0], domain[1], per_axis)
    grids = np.meshgrid(*([axis] * d), indexing='ij')
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def apriori_bound(f: Union[Callable, SpectralCoefficients], w: GammaWeight, n: int, delta: float,
                  h_ini: Optional[SpectralCoefficients] = None, case: Optional[str] = None,
                  domain: Tuple[float, float] = (0.0, 1.0), grid_points: Optional[int] = None,
                  quadrature_points: Optional[int] = None) -> BoundReport:
    """
    Population risk bound of the minimum FP-norm interpolant of n samples of f

    all_modes: Q |gamma| (2/sqrt(n) + 4 sqrt(2 log(4/delta)/n))
    zero_excluded: (|f - h_ini|_inf + 2 Q |gamma|) times the same factor, with zero mode bound
    c0 = |f - h_ini|_inf + Q |gamma|

    :param f: Target, a vectorized callable or lattice coefficients
    :param w: Frequency weight
    :param n: Sample count
    :param delta: Confidence level in (0, 1)
    :param h_ini: Initial function, zero when omitted
    :param case: Defaults to the one implied by the zero mode policy
    :param domain: Box on which the sup norm is taken
    :param grid_points: Sup grid points per axis
    :param quadrature_points: Projection points per axis when f is a callable
    :return: BoundReport, unbounded (inf) when f has mass on frozen modes
    """
    lattice = w.Lattice
    h_ini = SpectralCoefficients.zeros(lattice) if h_ini is None else h_ini
    case = case_for(w) if case is None else case
    grid = sup_grid(domain, lattice.D, grid_points)
    per_axis = int(round(grid.shape[0] ** (1 / lattice.D)))

    if callable(f):
        phi_f = project(f, lattice, quadrature_points, origin=domain[0])
        f_grid = np.asarray(f(grid), dtype=float).reshape(-1)
        projection_residual = float(np.max(np.abs(f_grid - evaluate(phi_f, grid))))
    else:
        phi_f = f
        f_grid = evaluate(phi_f, grid)
        projection_residual = 0.0
    diff = phi_f - h_ini
    Q = fp_norm(diff, w)
    sup = float(np.max(np.abs(f_grid - evaluate(h_ini, grid))))
    gamma = gamma_l2_norm(w)
    factor = risk_factor(n, delta)

    if not np.isfinite(Q):
        _logger.warning('Target has infinite FP-norm under this weight, bound is unbounded')
    if case == 'zero_excluded':
        c0 = sup + Q * gamma
        risk = (sup + 2 * Q * gamma) * factor
    else:
        c0 = None
        risk = Q * gamma * factor
    _check_case(case, c0)
    rad = rademacher_bound(Q, w, n, case, c0)
    return BoundReport(case=case, Q=Q, c0=c0, n=n, delta=delta, rad_bound=rad, risk_bound=float(risk),
                       projection_residual=projection_residual, grid_points=per_axis)


def _sine(v: float) -> Callable:
    def target(x):
        return np.sin(2 * np.pi * v * x[:, 0])
    return target


def frequency_sweep(v_list: List[float], learner: str, w: GammaWeight, n_train: int = 20, n_test: int = 500,
                    seed: int = 0, delta: float = 0.1, net_spec: Optional[NetSpec] = None,
                    repeats: int = 1) -> List[SweepRow]:
    """
    Fit n_train uniform samples of sin(2 pi v x) on [0, 1] and measure the test MSE on n_test fresh points

    Repeat j draws its train and test points from the stream (seed, j) and every v is fitted on those same
    points (and, for the nn learner, from the same initial net). The reported test loss is the mean over the
    repeats. The a priori bound of the same target is reported next to it.

    :param v_list: Target frequencies, each with 2v < n_train
    :param learner: 'lfp' (minimum FP-norm interpolant) or 'nn' (trained network, needs net_spec)
    :param w: Frequency weight of a one dimensional lattice
    :param n_train: Training points
    :param n_test: Test points
    :param seed: Base seed
    :param delta: Confidence level of the bound
    :param net_spec: Network settings for the nn learner
    :param repeats: Independent train/test draws averaged per v
    :return: One SweepRow per v
    """
    if learner not in ('lfp', 'nn'):
        raise InvalidConfigValue('learner', learner, "must be 'lfp' or 'nn'")
    if learner == 'nn' and net_spec is None:
        raise InvalidConfigValue('net_spec', None, 'is required by the nn learner')
    if repeats < 1:
        raise InvalidConfigValue('repeats', repeats, 'must be at least 1')
    for v in v_list:
        if 2 * v >= n_train:
            raise NyquistViolation(v, n_train)

    losses = np.zeros((repeats, len(v_list)))
    for repeat in range(repeats):
        rng = np.random.default_rng([seed, repeat])
        x_train = rng.uniform(0.0, 1.0, size=(n_train, 1))
        x_test = rng.uniform(0.0, 1.0, size=(n_test, 1))
        net = None
        if learner == 'nn':
            net = init_net(net_spec.model, net_spec.activation, net_spec.m, net_spec.asi, net_spec.seed + repeat)
        for position, v in enumerate(v_list):
            target = _sine(v)
            data = Dataset(x_train, target(x_train))
            if net is None:
                prediction = evaluate(solve_constrained(data, w), x_test)
            else:
                trained, _ = train_gd(net, data, lr=net_spec.lr, max_steps=net_spec.max_steps,
                                      loss_tol=net_spec.loss_tol)
                prediction = trained.forward_batch(x_test)
            losses[repeat, position] = np.mean((prediction - target(x_test)) ** 2)

    rows = []
    for position, v in enumerate(v_list):
        test_loss = float(np.mean(losses[:, position]))
        report = apriori_bound(_sine(v), w, n_train, delta)
        _logger.info(f'v={v}: test loss {test_loss:.3e} over {repeats} draws, risk bound {report.risk_bound:.3e}')
        rows.append(SweepRow(v=v, test_loss=test_loss, Q=report.Q, risk_bound=report.risk_bound,
                             rad_bound=report.rad_bound))
    return rows


def sweep_rows(rows: List[SweepRow]):
    """Header and plain rows of a frequency sweep, for CSV export"""
    return list(SweepRow._fields), [list(r) for r in rows]
