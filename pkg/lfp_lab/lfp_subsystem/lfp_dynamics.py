"""
lfp_dynamics.py – Gradient flow of lattice coefficients and frequency resolved convergence diagnostics

Every state of the flow has the form phi(t) = phi_ini + gamma^2 E* c(t) (plus a constant mode shift when
the zero mode is unpenalized), so both integrators work on the n dimensional vector c and rebuild phi
only at snapshots.
"""

import logging
import numpy as np
from scipy.linalg import eigh
from lfp_lab.lfp_exceptions import UnstableTimeStep, TrajectoryNotConverged, InvalidConfigValue
from lfp_lab.datatypes.general_types import ZeroModePolicy
from lfp_lab.datatypes.lfp_types import Trajectory, Band
from lfp_lab.spectral_domain.spectral_core import SpectralCoefficients, GammaWeight, fourier_matrix, evaluate
from lfp_lab.lfp_subsystem.lfp_solver import Dataset
from typing import List, Optional, Sequence

_logger = logging.getLogger(__name__)

# Eigenvalues below this fraction of the largest are treated as null directions
null_tol = 1e-12


class FlowOperator:
    """
    The n dimensional linear system behind the spectral flow on one dataset

    With r0 = Y - h_ini(X) the coefficient vector obeys dc/dt = q0 - M c. M = G and q0 = r0 unless the
    zero mode is unpenalized. In that case the constant mode relaxes infinitely fast, the data residual
    keeps zero mean for t > 0, and M = Pi G Pi, q0 = Pi r0 with Pi = I - 11'/n.

        Attributes

        - Phi_ini -- Starting coefficients
        - Data -- Training set
        - Weight -- Frequency weight
        - E -- (n, N) Fourier matrix on the data
        - G -- Gram matrix
        - M -- System matrix of the c flow
        - Q0 -- Forcing of the c flow
        - R0 -- Y - h_ini(X)
    """

    def __init__(self, phi_ini: SpectralCoefficients, data: Dataset, w: GammaWeight):
        self.logger = logging.getLogger(__name__)
        phi_ini.Lattice.check_compatible(w.Lattice)
        self.Phi_ini = phi_ini
        self.Data = data
        self.Weight = w
        self.E = fourier_matrix(w.Lattice, data.X)
        G = ((self.E * w.gram_weights) @ self.E.conj().T).real
        self.G = (G + G.T) / 2
        self.R0 = data.Y - evaluate(phi_ini, data.X)
        self.Free_zero = w.Lattice.Zero_mode_policy == ZeroModePolicy.UNPENALIZED
        if self.Free_zero:
            n = data.n
            projector = np.eye(n) - np.full((n, n), 1.0 / n)
            M = projector @ self.G @ projector
            self.M = (M + M.T) / 2
            self.Q0 = projector @ self.R0
        else:
            self.M = self.G
            self.Q0 = self.R0
        self.Eigenvalues, self.Eigenvectors = eigh(self.M)
        self.Eigenvalues = np.clip(self.Eigenvalues, 0.0, None)

    @property
    def lambda_max(self) -> float:
        return float(self.Eigenvalues[-1])

    @property
    def lambda_min(self) -> float:
        """Smallest eigenvalue of M on its range"""
        live = self.Eigenvalues[self.Eigenvalues > null_tol * self.lambda_max]
        return float(live[0]) if live.size else self.lambda_max

    def exact_c(self, t: float) -> np.ndarray:
        """c(t) = M^+ (I - exp(-M t)) q0, exact on the range of M"""
        lam = self.Eigenvalues
        live = lam > null_tol * max(self.lambda_max, np.finfo(float).tiny)
        gain = np.zeros_like(lam)
        gain[live] = -np.expm1(-lam[live] * t) / lam[live]
        return self.Eigenvectors @ (gain * (self.Eigenvectors.T @ self.Q0))

    def state(self, c: np.ndarray, t: float) -> SpectralCoefficients:
        """phi(t) rebuilt from c(t)"""
        lattice = self.Weight.Lattice
        delta = self.Weight.gram_weights * (self.E.conj().T @ c)
        if self.Free_zero and t > 0:
            delta[lattice.centre] += float(np.mean(self.R0 - self.G @ c))
        return self.Phi_ini + SpectralCoefficients(lattice, delta)


def default_horizon(flow: FlowOperator) -> float:
    """40 / lambda_min, long enough for every tolerance used here"""
    if flow.lambda_min <= 0:
        # Nothing but the constant mode moves
        return 1.0
    return 40.0 / flow.lambda_min


def snapshot_times(horizon: float, snapshots: int, first: float) -> np.ndarray:
    """t = 0 followed by log spaced times from first up to the horizon"""
    if snapshots < 2:
        raise InvalidConfigValue('snapshots', snapshots, 'must be at least 2')
    first = min(first, horizon)
    return np.concatenate([[0.0], np.geomspace(first, horizon, snapshots - 1)])


def evolve(phi_ini: SpectralCoefficients, data: Dataset, w: GammaWeight, scheme: str = 'exact',
           dt: Optional[float] = None, horizon: Optional[float] = None, snapshots: int = 50,
           times: Optional[Sequence[float]] = None) -> Trajectory:
    """
    Integrate d phi(k)/dt = gamma^2(k) sum_i (y_i - h(x_i, t)) exp(-2 pi i (k/L') . x_i)

    :param phi_ini: Starting coefficients
    :param data: Training set
    :param w: Frequency weight
    :param scheme: 'exact' (eigendecomposition) or 'euler'
    :param dt: Euler step, must be below 2 / lambda_max. The step before each snapshot is shortened so
        the trajectory is recorded at exactly the requested times
    :param horizon: Final time, defaults to 40 / lambda_min
    :param snapshots: Number of recorded times including t = 0
    :param times: Explicit snapshot times, overrides horizon and snapshots
    :return: Trajectory with data residuals h(x_i, t) - y_i
    """
    flow = FlowOperator(phi_ini, data, w)
    if times is None:
        T = default_horizon(flow) if horizon is None else float(horizon)
        first = 1e-2 / flow.lambda_max if flow.lambda_max > 0 else 1e-6 * T
        times = snapshot_times(T, snapshots, first=first)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise InvalidConfigValue('times', 'not strictly increasing from t >= 0', 'snapshot times must increase')

    if scheme == 'exact':
        cs = [flow.exact_c(t) for t in times]
    elif scheme == 'euler':
        times, cs = _euler(flow, times, dt)
    else:
        raise InvalidConfigValue('scheme', scheme, "must be 'exact' or 'euler'")

    states = [flow.state(c, t) for c, t in zip(cs, times)]
    residuals = [evaluate(s, data.X) - data.Y for s in states]
    _logger.debug(f'{scheme} flow to t={times[-1]:.3e}: residual {np.linalg.norm(residuals[0]):.3e}'
                  f' -> {np.linalg.norm(residuals[-1]):.3e}')
    return Trajectory(times=times, states=states, data_residuals=residuals)


def _euler(flow: FlowOperator, times: np.ndarray, dt: Optional[float]):
    bound = 2.0 / flow.lambda_max if flow.lambda_max > 0 else np.inf
    if dt is None:
        dt = 0.1 / flow.lambda_max if flow.lambda_max > 0 else 1.0
    if not 0 < dt < bound:
        raise UnstableTimeStep(dt, bound)
    c = np.zeros(flow.Data.n)
    cs = []
    now = 0.0
    for target in times:
        full = int(np.floor((target - now) / dt))
        for _ in range(full):
            c = c + dt * (flow.Q0 - flow.M @ c)
        # A shorter last step lands exactly on the snapshot time
        rest = target - now - full * dt
        if rest > 0:
            c = c + rest * (flow.Q0 - flow.M @ c)
        now = target
        cs.append(c.copy())
    return times, cs


def spectral_velocity_envelope(phi_ini: SpectralCoefficients, data: Dataset, w: GammaWeight) -> np.ndarray:
    """
    |d phi(k)/dt| at t = 0, that is gamma^2(k) |sum_i r_i exp(-2 pi i (k/L') . x_i)|

    The constant mode is infinitely fast when unpenalized (inf unless the residual sums to zero) and still
    when excluded.

    :return: (N,) nonnegative speeds in lattice order
    """
    flow = FlowOperator(phi_ini, data, w)
    lattice = w.Lattice
    speed = w.gram_weights * np.abs(flow.E.conj().T @ flow.R0)
    policy = lattice.Zero_mode_policy
    if policy == ZeroModePolicy.UNPENALIZED:
        speed[lattice.centre] = np.inf if abs(flow.R0.sum()) > 0 else 0.0
    elif policy == ZeroModePolicy.EXCLUDED:
        speed[lattice.centre] = 0.0
    return speed


def band_convergence_times(traj: Trajectory, target: SpectralCoefficients, bands: List[Band],
                           threshold: float = 0.5) -> List[float]:
    """
    First snapshot time at which each band's error has dropped to threshold times its initial value

    Bands are annuli low <= |k| < high on the integer lattice, whatever L' is. A band with no initial error
    reports 0 and a band that never gets there reports inf. Every band error is a mixture of the same n
    exponentials of the data flow, so the times need not increase with the band.

    :param traj: A converged trajectory
    :param target: Limit coefficients, usually the constrained solution
    :param bands: Frequency bands
    :param threshold: Fraction in (0, 1]
    :return: One time per band
    """
    if not 0 < threshold <= 1:
        raise InvalidConfigValue('threshold', threshold, 'must lie in (0, 1]')
    initial = np.linalg.norm(traj.data_residuals[0])
    final = np.linalg.norm(traj.data_residuals[-1])
    ratio = final / initial if initial > 0 else 0.0
    if initial > 0 and not ratio < threshold:
        raise TrajectoryNotConverged(ratio, threshold)

    lattice = target.Lattice
    radius = np.linalg.norm(lattice.Points, axis=1)
    errors = np.array([np.abs(s.Phi - target.Phi) ** 2 for s in traj.states])
    result = []
    for band in bands:
        mask = (radius >= band.low) & (radius < band.high)
        err = errors[:, mask].sum(axis=1)
        if err[0] == 0:
            result.append(0.0)
            continue
        hit = np.nonzero(err / err[0] <= threshold)[0]
        if hit.size == 0:
            _logger.warning(f'Band [{band.low}, {band.high}) never reached {threshold} of its initial error')
            result.append(float('inf'))
        else:
            result.append(float(traj.times[hit[0]]))
    return result


def trajectory_rows(traj: Trajectory, target: SpectralCoefficients, bands: List[Band]):
    """Rows t, residual_norm, then the squared error of each band, for CSV export"""
    radius = np.linalg.norm(target.Lattice.Points, axis=1)
    masks = [(radius >= b.low) & (radius < b.high) for b in bands]
    header = ['t', 'residual_norm'] + [f'band_{b.low}_{b.high}' for b in bands]
    rows = []
    for t, state, res in zip(traj.times, traj.states, traj.data_residuals):
        err = np.abs(state.Phi - target.Phi) ** 2
        rows.append([float(t), float(np.linalg.norm(res))] + [float(err[m].sum()) for m in masks])
    return header, rows
