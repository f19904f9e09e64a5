"""
experiment_test.py - Harness wiring and artifacts on small configurations
"""

import csv
import json
import numpy as np
import pytest
from lfp_lab.configuration.config import Config, resolve_config
from lfp_lab.spectral_domain.param_model import PointMass, Gaussian, RadialGaussian
from lfp_lab.experiment.experiment import (Experiment, build_dataset, build_model, build_lattice, interior_mask,
                                          period_origin)


@pytest.fixture(autouse=True)
def no_user_config(tmp_path, monkeypatch):
    monkeypatch.setattr(Config, 'user_config_home', tmp_path / 'user')


def test_build_model_choices():
    config = resolve_config(experiment='fig2_relu_cubic')
    model, activation, mc = build_model(config, 1)
    assert isinstance(model.A_dist, PointMass) and mc is None
    assert model.a2 == pytest.approx(1e-4) and model.r2 == pytest.approx(100.0)
    config = resolve_config(experiment='fig2_relu_cubic', overrides={
        'param_model': {'a2': 4.0, 'r': 2.0, 'a_kind': 'gaussian', 'r_kind': 'radial_gaussian'}})
    model, activation, mc = build_model(config, 2)
    assert isinstance(model.A_dist, Gaussian) and isinstance(model.R_dist, RadialGaussian)
    assert model.a2 == pytest.approx(4.0)
    assert model.r2 == pytest.approx(4.0)
    assert mc.samples == config.param_model['mc_samples']


def test_lattice_period_follows_domain():
    config = resolve_config(experiment='fig2d_xor')
    data = build_dataset(config)
    lattice = build_lattice(config, data)
    assert (lattice.D, lattice.K, lattice.L_prime) == (2, 40, 20.0)


def test_interior_mask():
    config = resolve_config(experiment='fig2_relu_cubic')
    data = build_dataset(config)
    x = np.array([-0.4, -0.35, 0.0, 0.35, 0.4])
    assert list(interior_mask(x, data)) == [False, True, True, True, False]


def test_sweep_artifacts(tmp_path):
    config = resolve_config(experiment='freq_sweep', overrides={'sweep': {'v': [0, 1, 2], 'n_test': 100}})
    status = Experiment(config, tmp_path).run()
    metrics = json.loads((tmp_path / 'metrics.json').read_text())
    assert status == 0 and metrics['passed']
    assert metrics['experiment'] == 'freq_sweep'
    assert metrics['config']['sweep']['v'] == [0, 1, 2]
    assert metrics['checks']['bound_violations']['ok']
    assert metrics['metrics']['sweep'][0]['test_loss'] == 0.0
    with open(tmp_path / 'sweep.csv', newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['v', 'test_loss', 'Q', 'risk_bound', 'rad_bound']
    assert len(rows) == 4


def test_default_sweep_passes(tmp_path):
    experiment = Experiment(resolve_config(experiment='freq_sweep'), tmp_path)
    assert experiment.run() == 0
    assert experiment.Metrics['spearman'] >= 0.9 - 1e-12
    losses = [row['test_loss'] for row in experiment.Metrics['sweep']]
    assert losses[0] < losses[-1]


def test_default_spline_check_passes(tmp_path):
    experiment = Experiment(resolve_config(experiment='spline_check'), tmp_path)
    assert experiment.run() == 0
    for name in ('lfp_vs_linear_sup', 'lfp_vs_natural_cubic_sup', 'ridge_vs_constrained_sup'):
        assert experiment.Checks[name]['ok'], name


def test_default_cubic_figure_passes(tmp_path):
    experiment = Experiment(resolve_config(experiment='fig2_relu_cubic'), tmp_path)
    assert experiment.run() == 0
    for name in ('nn_train_loss', 'nn_vs_lfp_sup', 'lfp_vs_spline_sup', 'ntk_vs_lfp_sup'):
        assert experiment.Checks[name]['ok'], name


def test_default_linear_figure_passes(tmp_path):
    experiment = Experiment(resolve_config(experiment='fig2_relu_linear'), tmp_path)
    assert experiment.run() == 0
    for name in ('nn_train_loss', 'lfp_interpolation', 'nn_vs_lfp_sup', 'lfp_vs_spline_sup', 'ntk_vs_lfp_sup'):
        assert experiment.Checks[name]['ok'], name
    assert experiment.Metrics['nn']['displacement'] <= 0.05
    with open(tmp_path / 'curves.csv', newline='') as f:
        header = next(csv.reader(f))
    assert header == ['x', 'f_nn', 'f_lfp', 'f_spline', 'f_ntk']


def test_default_tanh_figure_passes(tmp_path):
    experiment = Experiment(resolve_config(experiment='fig_tanh'), tmp_path)
    assert experiment.run() == 0
    assert experiment.Checks['nn_vs_lfp_sup']['ok'] and experiment.Checks['ntk_vs_lfp_sup']['ok']


def test_centred_period_box():
    config = resolve_config(experiment='fig2_relu_cubic')
    data = build_dataset(config)
    assert period_origin(data, build_lattice(config, data)) == pytest.approx(-5.0)
    config = resolve_config(experiment='fig2d_xor')
    data = build_dataset(config)
    assert period_origin(data, build_lattice(config, data)) == pytest.approx(-10.0)


def test_flow_limits(tmp_path):
    config = resolve_config(experiment='theorem2_check')
    experiment = Experiment(config, tmp_path)
    experiment.theorem2_check(seeds=3)
    for name in ('matrix_gap', 'weighted_matrix_gap', 'lattice_gap_r_dominant', 'lattice_gap_a_dominant',
                 'residual_descent_r_dominant'):
        assert experiment.Checks[name]['ok'], name
    assert len(experiment.Metrics['band_times_a_dominant']) == 3
    assert isinstance(experiment.Metrics['band_times_ordered_r_dominant'], bool)
    assert (tmp_path / 'trajectory.csv').exists()
