"""
splines.py – Linear and natural cubic spline interpolants in one dimension
"""

import numpy as np
from scipy.linalg import solve_banded
from lfp_lab.lfp_exceptions import SplineFitError, SplineDomainError
from lfp_lab.lfp_subsystem.lfp_solver import Dataset

kinds = ('linear', 'natural_cubic')


class SplineInterpolant:
    """
    Piecewise polynomial through sorted knots

    Piece i covers [x_i, x_{i+1}] and is c0 + c1 t + c2 t^2 + c3 t^3 with t = x - x_i.

        Attributes

        - Knots -- (n,) sorted abscissae
        - Values -- (n,) ordinates
        - Kind -- 'linear' or 'natural_cubic'
        - Coefficients -- (4, n-1) piece coefficients, row j holds c_j
    """

    def __init__(self, knots, values, kind: str, coefficients):
        self.Knots = knots
        self.Values = values
        self.Kind = kind
        self.Coefficients = coefficients

    def _locate(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self.Knots[0], self.Knots[-1]
        outside = (x < lo) | (x > hi)
        if np.any(outside):
            raise SplineDomainError(float(x[outside][0]), float(lo), float(hi))
        return np.clip(np.searchsorted(self.Knots, x, side='right') - 1, 0, self.Knots.size - 2)

    def piece_derivatives(self, i: int, x):
        """Value, first and second derivative of piece i at x (x may lie outside the piece)"""
        c0, c1, c2, c3 = self.Coefficients[:, i]
        t = np.asarray(x, dtype=float) - self.Knots[i]
        return (c0 + t * (c1 + t * (c2 + t * c3)),
                c1 + t * (2 * c2 + 3 * c3 * t),
                2 * c2 + 6 * c3 * t)

    def evaluate(self, x):
        """
        Spline value, exact at the knots

        :param x: Scalar or array inside [first knot, last knot]
        :return: Same shape as x
        """
        x_arr = np.asarray(x, dtype=float)
        flat = x_arr.reshape(-1)
        idx = self._locate(flat)
        c = self.Coefficients[:, idx]
        t = flat - self.Knots[idx]
        out = c[0] + t * (c[1] + t * (c[2] + t * c[3]))
        right = self.Knots[idx + 1] == flat
        out[right] = self.Values[idx[right] + 1]
        out = out.reshape(x_arr.shape)
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    def __repr__(self):
        return f'SplineInterpolant({self.Kind}, {self.Knots.size} knots)'


def _natural_second_derivatives(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Second derivatives M with M_0 = M_{n-1} = 0 from the tridiagonal continuity system"""
    n = x.size
    M = np.zeros(n)
    if n < 3:
        return M
    h = np.diff(x)
    slope = np.diff(y) / h
    # Banded storage for the interior unknowns M_1 .. M_{n-2}
    ab = np.zeros((3, n - 2))
    ab[0, 1:] = h[1:-1]
    ab[1, :] = 2 * (h[:-1] + h[1:])
    ab[2, :-1] = h[1:-1]
    rhs = 6 * (slope[1:] - slope[:-1])
    M[1:-1] = solve_banded((1, 1), ab, rhs)
    return M


def fit(kind: str, data: Dataset) -> SplineInterpolant:
    """
    Interpolating spline through a one dimensional training set

    The natural cubic spline minimizes the integral of h''^2 among all interpolants, the linear spline
    the integral of h'^2.

    :param kind: 'linear' or 'natural_cubic'
    :param data: Training set with d = 1
    :return: The interpolant
    """
    if kind not in kinds:
        raise SplineFitError(f'unknown kind "{kind}", choose one of {kinds}')
    if data.d != 1:
        raise SplineFitError(f'needs one dimensional data, got d={data.d}')
    if data.n < 2:
        raise SplineFitError('at least two knots are required')
    order = np.argsort(data.X[:, 0], kind='stable')
    x = data.X[order, 0]
    y = data.Y[order]
    if np.any(np.diff(x) <= 0):
        raise SplineFitError('knots must be distinct')

    h = np.diff(x)
    slope = np.diff(y) / h
    coefficients = np.zeros((4, x.size - 1))
    coefficients[0] = y[:-1]
    if kind == 'linear':
        coefficients[1] = slope
    else:
        M = _natural_second_derivatives(x, y)
        coefficients[1] = slope - h * (2 * M[:-1] + M[1:]) / 6
        coefficients[2] = M[:-1] / 2
        coefficients[3] = (M[1:] - M[:-1]) / (6 * h)
    return SplineInterpolant(x, y, kind, coefficients)
