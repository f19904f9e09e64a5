"""
nn_reference.py – Finite width two-layer network trained by full batch gradient descent
"""

import json
import logging
import numpy as np
from lfp_lab.lfp_exceptions import (OddAsiWidth, LearningRateTooLarge, TrainingDiverged, CheckpointFileOpen,
                                    InvalidConfigValue)
from lfp_lab.spectral_domain.activation_spectra import Activation, get_activation
from lfp_lab.spectral_domain.param_model import ParamModel, sample_neurons
from lfp_lab.spectral_domain.spectral_core import as_points
from lfp_lab.lfp_subsystem.lfp_solver import Dataset
from typing import List, Optional, Tuple

point_chunk = 256
warmup_steps = 10
divergence_factor = 1e3


class TwoLayerNet:
    """
    f(x) = (1/sqrt(m)) sum_j a_j s(w_j.x + b_j)

    With Asi the neurons come in two halves, neuron j and neuron j + m/2 start with the same (w, b) and
    opposite a. The forward pass adds the halves elementwise first, so the initial output is exactly 0.

        Attributes

        - A -- (m,) output weights
        - W -- (m, d) input weights
        - B -- (m,) biases
        - Activation -- The activation
        - Asi -- Antisymmetric pairing in use
    """

    def __init__(self, a, w, b, activation: Activation, asi: bool = False):
        self.logger = logging.getLogger(__name__)
        self.A = np.asarray(a, dtype=float).reshape(-1)
        self.W = np.asarray(w, dtype=float).reshape(self.A.size, -1)
        self.B = np.asarray(b, dtype=float).reshape(-1)
        self.Activation = activation
        self.Asi = bool(asi)
        if self.Asi and self.m % 2:
            raise OddAsiWidth(self.m)

    @property
    def m(self) -> int:
        return self.A.size

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def copy(self) -> 'TwoLayerNet':
        return TwoLayerNet(self.A.copy(), self.W.copy(), self.B.copy(), self.Activation, self.Asi)

    def parameters(self) -> np.ndarray:
        """Flat vector (a, w, b)"""
        return np.concatenate([self.A, self.W.reshape(-1), self.B])

    def _pre_activation(self, X: np.ndarray) -> np.ndarray:
        return X @ self.W.T + self.B

    def forward_batch(self, X) -> np.ndarray:
        """Outputs at (M, d) points"""
        X = as_points(X, self.d)
        out = np.empty(X.shape[0])
        half = self.m // 2
        for start in range(0, X.shape[0], point_chunk):
            terms = self.A * self.Activation.value(self._pre_activation(X[start:start + point_chunk]))
            if self.Asi:
                terms = terms[:, :half] + terms[:, half:]
            out[start:start + point_chunk] = terms.sum(axis=1)
        return out / np.sqrt(self.m)

    def forward(self, x) -> float:
        """Output at a single point"""
        return float(self.forward_batch(np.reshape(np.asarray(x, dtype=float), (1, -1)))[0])

    def loss(self, data: Dataset) -> float:
        """Training MSE, mean_i (f(x_i) - y_i)^2"""
        return float(np.mean((self.forward_batch(data.X) - data.Y) ** 2))

    def loss_gradient(self, data: Dataset) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Gradient of R_S = 1/2 sum_i (f(x_i) - y_i)^2

        :return: (d a, d w, d b)
        """
        return self.residual_and_gradient(data)[1]

    def residual_and_gradient(self, data: Dataset):
        """Residual f(X) - Y and the loss gradient (d a, d w, d b) from one forward pass"""
        z = self._pre_activation(data.X)
        s = self.Activation.value(z)
        ds = self.Activation.derivative(z)
        e = self.forward_batch(data.X) - data.Y
        root = np.sqrt(self.m)
        grad_a = s.T @ e / root
        back = ds.T * e  # (m, n)
        grad_b = self.A * back.sum(axis=1) / root
        grad_w = self.A[:, None] * (back @ data.X) / root
        return e, (grad_a, grad_w, grad_b)

    def empirical_ntk_matrix(self, X, X2=None) -> np.ndarray:
        """
        grad_theta f(x) . grad_theta f(x') at the current parameters

        (1/m) sum_j [s(z_j) s(z'_j) + a_j^2 s'(z_j) s'(z'_j) (x.x' + 1)]
        """
        X = as_points(X, self.d)
        same = X2 is None
        X2 = X if same else as_points(X2, self.d)
        z1, z2 = self._pre_activation(X), self._pre_activation(X2)
        act = self.Activation
        ss = act.value(z1) @ act.value(z2).T
        dd = (act.derivative(z1) * self.A ** 2) @ act.derivative(z2).T
        K = (ss + dd * (X @ X2.T + 1.0)) / self.m
        return (K + K.T) / 2 if same else K

    def save(self, path) -> None:
        """JSON checkpoint with m, activation and the parameter arrays"""
        doc = {'m': self.m, 'activation': self.Activation.Name, 'asi': self.Asi,
               'a': self.A.tolist(), 'w': self.W.tolist(), 'b': self.B.tolist()}
        try:
            with open(path, 'w') as f:
                json.dump(doc, f)
        except OSError:
            raise CheckpointFileOpen(path) from None

    @classmethod
    def load(cls, path) -> 'TwoLayerNet':
        try:
            with open(path, 'r') as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError):
            raise CheckpointFileOpen(path) from None
        return cls(doc['a'], doc['w'], doc['b'], get_activation(doc['activation']), doc.get('asi', False))

    def __repr__(self):
        return f'TwoLayerNet(m={self.m}, d={self.d}, {self.Activation.Name}, asi={self.Asi})'


def init_net(model: ParamModel, activation: Activation, m: int, asi: bool = True, seed: int = 0) -> TwoLayerNet:
    """
    Draw a network from the initial parameter distribution

    :param model: Initial parameter distribution
    :param activation: The activation
    :param m: Width, even and >= 2 with asi
    :param asi: Duplicate (w, b) and negate a so the initial output is 0
    :param seed: Seed
    """
    if asi:
        if m < 2 or m % 2:
            raise OddAsiWidth(m)
        a, w, b = sample_neurons(model, m // 2, seed)
        return TwoLayerNet(np.concatenate([a, -a]), np.vstack([w, w]), np.concatenate([b, b]), activation, asi=True)
    a, w, b = sample_neurons(model, m, seed)
    return TwoLayerNet(a, w, b, activation, asi=False)


def empirical_ntk(net: TwoLayerNet, x, x2) -> float:
    """Empirical NTK at one pair of points"""
    return float(net.empirical_ntk_matrix(np.reshape(x, (1, -1)), np.reshape(x2, (1, -1)))[0, 0])


def default_learning_rate(net: TwoLayerNet, data: Dataset) -> float:
    """1 / (2 lambda_max) of the empirical NTK Gram matrix on the training points"""
    lam_max = float(np.linalg.eigvalsh(net.empirical_ntk_matrix(data.X))[-1])
    return 1.0 / (2.0 * lam_max)


def train_gd(net: TwoLayerNet, data: Dataset, lr: Optional[float] = None, max_steps: int = 100000,
             loss_tol: float = 1e-6, log_every: int = 10000) -> Tuple[TwoLayerNet, List[float]]:
    """
    Full batch gradient descent on R_S, all of a, w and b are trained

    Stops once the training MSE is at most loss_tol or after max_steps steps. The input net is left untouched.

    :param net: Starting network
    :param data: Training set
    :param lr: Step size, defaults to 1 / (2 lambda_max) of the empirical NTK Gram matrix
    :param max_steps: Step budget
    :param loss_tol: Target training MSE
    :param log_every: Progress logging interval in steps
    :return: (trained copy, MSE after every step, starting with the initial one)
    """
    logger = logging.getLogger(__name__)
    if max_steps < 0:
        raise InvalidConfigValue('max_steps', max_steps, 'must be nonnegative')
    lr = default_learning_rate(net, data) if lr is None else float(lr)
    if not lr > 0:
        raise InvalidConfigValue('lr', lr, 'must be positive')
    trained = net.copy()
    e, grads = trained.residual_and_gradient(data)
    history = [float(np.mean(e ** 2))]
    initial = history[0]
    logger.info(f'Training {trained} on {data.n} points, lr={lr:.3e}, initial loss {initial:.3e}')
    step = 0
    while step < max_steps and history[-1] > loss_tol:
        grad_a, grad_w, grad_b = grads
        trained.A -= lr * grad_a
        trained.W -= lr * grad_w
        trained.B -= lr * grad_b
        step += 1
        # The gradient at the new point comes with its loss, it is used by the next step
        e, grads = trained.residual_and_gradient(data)
        history.append(float(np.mean(e ** 2)))
        if history[-1] > divergence_factor * initial:
            raise TrainingDiverged(step, history[-1], initial)
        if step == warmup_steps and history[-1] >= initial:
            raise LearningRateTooLarge(lr)
        if log_every and step % log_every == 0:
            logger.info(f'step {step}: loss {history[-1]:.3e}')
    logger.info(f'Stopped after {step} steps with loss {history[-1]:.3e}')
    return trained, history


def parameter_displacement(start: TwoLayerNet, end: TwoLayerNet) -> float:
    """|theta_end - theta_start| / |theta_start|"""
    theta0 = start.parameters()
    return float(np.linalg.norm(end.parameters() - theta0) / np.linalg.norm(theta0))
