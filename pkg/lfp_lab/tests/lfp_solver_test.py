"""
lfp_solver_test.py - Minimum FP-norm interpolation, the ridge path and the matrix equivalence check
"""

import numpy as np
import pytest
from lfp_lab.datatypes.general_types import ZeroModePolicy
from lfp_lab.lfp_exceptions import InvalidDataset, RankDeficientSystem, IllConditionedGram
from lfp_lab.spectral_domain.activation_spectra import get_activation
from lfp_lab.spectral_domain.param_model import regime_model
from lfp_lab.spectral_domain.spectral_core import (Lattice, SpectralCoefficients, evaluate, fp_norm,
                                                   gamma_l2_norm, gamma_weight, power_law_weight)
from lfp_lab.lfp_subsystem.lfp_solver import (Dataset, factor_spd, gram_matrix, solve_constrained, solve_ridge,
                                              interpolation_residual, equivalence_check_matrix, lattice_drift)

relu = get_activation('relu')
lattice = Lattice(d=1, K=200, L_prime=10.0)


def band_limited(rng, lat, band=20):
    """Random real trigonometric polynomial with modes |k| <= band"""
    modes = {0: rng.standard_normal()}
    for k in range(1, band + 1):
        modes[k] = complex(rng.standard_normal(), rng.standard_normal()) / (1 + k) ** 2
    return SpectralCoefficients.from_modes(lat, modes)


def stratified(rng, n):
    return ((np.arange(n) + rng.uniform(0.1, 0.9, n)) / n)[:, None]


def test_dataset_invariants():
    with pytest.raises(InvalidDataset, match='conflicting'):
        Dataset([[0.1], [0.1]], [1.0, 2.0])
    with pytest.raises(InvalidDataset, match='repeated'):
        Dataset([[0.1], [0.1]], [1.0, 1.0])
    with pytest.raises(InvalidDataset):
        Dataset([[1.5]], [0.0])
    with pytest.raises(InvalidDataset):
        Dataset([[0.2], [0.3]], [1.0])
    data = Dataset([0.2, 0.4], [1.0, 2.0])
    assert (data.n, data.d) == (2, 1)


def test_single_point_gram_is_gamma_norm():
    w = gamma_weight(lattice, regime_model(relu, 'mixed', 1), relu)
    G = gram_matrix(np.array([[0.37]]), w)
    assert G[0, 0] == pytest.approx(gamma_l2_norm(w) ** 2)


def test_gram_is_psd_and_singular_for_coincident_points():
    rng = np.random.default_rng(0)
    w = gamma_weight(lattice, regime_model(relu, 'r_dominant', 1), relu)
    for _ in range(20):
        lam = np.linalg.eigvalsh(gram_matrix(rng.uniform(0, 1, (6, 1)), w))
        assert lam[0] >= -1e-10 * lam[-1]
    lam = np.linalg.eigvalsh(gram_matrix(np.array([[0.3], [0.3], [0.6]]), w))
    assert lam[0] <= 1e-8 * lam[-1]


def test_factor_rejects_ill_conditioned_matrix():
    with pytest.raises(IllConditionedGram):
        factor_spd(np.diag([1.0, 1e-14]))


def test_single_point_with_excluded_zero_mode():
    excluded = Lattice(d=1, K=50, L_prime=10.0, zero_mode_policy=ZeroModePolicy.EXCLUDED)
    w = gamma_weight(excluded, regime_model(relu, 'mixed', 1), relu)
    data = Dataset([[0.4]], [1.7])
    phi = solve_constrained(data, w)
    assert evaluate(phi, 0.4) == pytest.approx(1.7, abs=1e-12)
    direction = w.gram_weights * np.exp(-2j * np.pi * excluded.Frequencies[:, 0] * 0.4)
    ratio = phi.Phi[w.Lattice.norm_mask] / direction[w.Lattice.norm_mask]
    assert np.allclose(ratio, ratio[0])


def test_single_point_with_free_zero_mode_is_constant():
    w = gamma_weight(lattice, regime_model(relu, 'mixed', 1), relu)
    phi = solve_constrained(Dataset([[0.4]], [1.7]), w)
    assert np.allclose(evaluate(phi, np.linspace(0, 1, 11)), 1.7)


def test_linear_weight_gives_straight_line():
    fine = Lattice(d=1, K=400, L_prime=10.0)
    phi = solve_constrained(Dataset([[0.0], [1.0]], [0.0, 1.0]), power_law_weight(fine, linear=1.0))
    assert evaluate(phi, 0.5) == pytest.approx(0.5, abs=1e-2)


def test_minimum_norm_and_zero_mode_bounds():
    rng = np.random.default_rng(5)
    w = gamma_weight(lattice, regime_model(relu, 'mixed', 1), relu)
    gamma = gamma_l2_norm(w)
    grid = np.linspace(0, lattice.L_prime, 4096, endpoint=False)
    for _ in range(30):
        target = band_limited(rng, lattice)
        X = stratified(rng, 5)
        data = Dataset(X, evaluate(target, X))
        phi = solve_constrained(data, w)
        assert interpolation_residual(phi, data) <= 1e-8 * (1 + np.max(np.abs(data.Y)))
        Q = fp_norm(target, w)
        assert fp_norm(phi, w) <= Q * (1 + 1e-9)
        sup = np.max(np.abs(evaluate(target, grid)))
        assert abs(phi.Phi[lattice.centre]) <= sup + Q * gamma


def test_constrained_respects_initial_function():
    rng = np.random.default_rng(2)
    w = gamma_weight(lattice, regime_model(relu, 'r_dominant', 1), relu)
    phi_ini = band_limited(rng, lattice)
    X = stratified(rng, 4)
    data = Dataset(X, evaluate(phi_ini, X))
    assert np.allclose(solve_constrained(data, w, phi_ini).Phi, phi_ini.Phi, atol=1e-12)


def test_ridge_fixed_point():
    rng = np.random.default_rng(3)
    w = power_law_weight(lattice, linear=1.0)
    phi_ini = band_limited(rng, lattice)
    X = stratified(rng, 3)
    data = Dataset(X, evaluate(phi_ini, X))
    assert np.allclose(solve_ridge(data, w, 1e-3, phi_ini).Phi, phi_ini.Phi)


def test_ridge_residual_shrinks_linearly_with_eps():
    w = power_law_weight(lattice, linear=1.0)
    data = Dataset([[0.1], [0.5], [0.9]], [0.3, -1.0, 0.6])
    eps = np.array([1e-1, 1e-2, 1e-3])
    residuals = [interpolation_residual(solve_ridge(data, w, e), data) for e in eps]
    slope = np.polyfit(np.log(eps), np.log(residuals), 1)[0]
    assert 0.9 <= slope <= 1.1


def test_ridge_agrees_with_constrained():
    model = regime_model(relu, 'a_dominant', 1)
    w = gamma_weight(lattice, model, relu, prefactor=False)
    w = w.scaled(1.0 / gamma_l2_norm(w) ** 2)
    data = Dataset([[0.1], [0.3], [0.45], [0.7], [0.9]], [0.2, -0.4, 0.5, 0.1, -0.3])
    grid = np.linspace(0, 1, 512)
    ridge = evaluate(solve_ridge(data, w), grid)
    exact = evaluate(solve_constrained(data, w), grid)
    assert np.max(np.abs(ridge - exact)) <= 1e-3 * np.max(np.abs(data.Y))


def test_ridge_with_penalized_zero_mode():
    penalized = Lattice(d=1, K=50, L_prime=10.0, zero_mode_policy=ZeroModePolicy.PENALIZED)
    w = power_law_weight(penalized, linear=1.0, zero_gamma2=100.0)
    data = Dataset([[0.2], [0.8]], [1.0, 1.0])
    phi = solve_ridge(data, w, eps=1e-8)
    assert interpolation_residual(phi, data) <= 1e-6


def test_constrained_solution_ignores_weight_scale():
    rng = np.random.default_rng(14)
    w = gamma_weight(lattice, regime_model(relu, 'mixed', 1), relu)
    data = Dataset(stratified(rng, 5), rng.standard_normal(5))
    base = solve_constrained(data, w).Phi
    for c in (1e-3, 7.0, 1e4):
        scaled = solve_constrained(data, w.scaled(c)).Phi
        assert np.max(np.abs(scaled - base)) <= 1e-10 * np.max(np.abs(base))


def test_ridge_path_approaches_constrained_solution():
    w = power_law_weight(lattice, linear=1.0)
    data = Dataset([[0.1], [0.5], [0.9]], [0.3, -1.0, 0.6])
    exact = solve_constrained(data, w)
    distances = [fp_norm(solve_ridge(data, w, eps) - exact, w) for eps in (1e-2, 1e-4, 1e-6)]
    assert distances[0] > distances[1] > distances[2]


def test_minimizer_is_orthogonal_to_other_interpolants():
    rng = np.random.default_rng(15)
    w = gamma_weight(lattice, regime_model(relu, 'r_dominant', 1), relu)
    X = stratified(rng, 4)
    phi_ini = band_limited(rng, lattice)
    data = Dataset(X, rng.standard_normal(4))
    h_min = solve_constrained(data, w, phi_ini)
    for _ in range(5):
        # psi minus its own minimum norm interpolant vanishes on X
        psi = band_limited(rng, lattice)
        null = psi - solve_constrained(Dataset(X, evaluate(psi, X)), w)
        h = h_min + null
        assert interpolation_residual(h, data) <= 1e-8
        lhs = fp_norm(h - phi_ini, w) ** 2
        rhs = fp_norm(h_min - phi_ini, w) ** 2 + fp_norm(h - h_min, w) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_matrix_equivalence():
    rng = np.random.default_rng(11)
    for _ in range(100):
        P = rng.standard_normal((5, 12))
        result = equivalence_check_matrix(P, rng.standard_normal(5), rng.standard_normal(12))
        assert result.gap <= 1e-8 * np.linalg.norm(result.theta_closed)


def test_weighted_matrix_equivalence():
    rng = np.random.default_rng(12)
    P = rng.standard_normal((4, 9))
    result = equivalence_check_matrix(P, rng.standard_normal(4), np.zeros(9), weights=rng.uniform(0.5, 2, 9))
    assert result.gap <= 1e-8 * np.linalg.norm(result.theta_closed)
    assert np.allclose(P @ result.theta_closed, P @ result.theta_ode)


def test_matrix_flow_follows_the_ode():
    rng = np.random.default_rng(13)
    P = rng.standard_normal((3, 7))
    Y, theta_ini = rng.standard_normal(3), rng.standard_normal(7)
    W = rng.uniform(0.5, 2.0, 7)
    M = P @ (W[:, None] * P.T)
    r0 = Y - P @ theta_ini
    for T in (1e-6, 0.3, 2.0):
        result = equivalence_check_matrix(P, Y, theta_ini, T=T, weights=W)
        lam, V = np.linalg.eigh(M)
        decayed = V @ (-np.expm1(-lam * T) / lam * (V.T @ r0))
        assert np.allclose(result.theta_ode, theta_ini + W * (P.T @ decayed), rtol=1e-9, atol=1e-12)
    early = equivalence_check_matrix(P, Y, theta_ini, T=1e-6, weights=W)
    assert np.allclose(early.theta_ode, theta_ini + 1e-6 * W * (P.T @ r0), atol=1e-10)
    assert early.gap > 1e-3
    late = equivalence_check_matrix(P, Y, theta_ini, weights=W)
    assert 0 < late.gap <= 1e-8 * np.linalg.norm(late.theta_closed)


def test_matrix_equivalence_trivial_cases():
    Y = np.array([1.0, -2.0, 3.0])
    assert np.allclose(equivalence_check_matrix(np.eye(3), Y, np.zeros(3)).theta_closed, Y)
    P = np.random.default_rng(1).standard_normal((2, 5))
    theta = np.arange(5.0)
    assert np.allclose(equivalence_check_matrix(P, P @ theta, theta).theta_closed, theta)
    with pytest.raises(RankDeficientSystem):
        equivalence_check_matrix(np.ones((2, 3)), [1.0, 2.0], np.zeros(3))


def test_lattice_drift_is_small_for_smooth_weight():
    w_of = lambda lat: gamma_weight(lat, regime_model(relu, 'r_dominant', 1), relu)
    data = Dataset([[0.1], [0.4], [0.8]], [0.5, -0.2, 0.3])
    assert lattice_drift(data, w_of, Lattice(d=1, K=100, L_prime=10.0)) <= 1e-2
