"""
validate.py – Static checks of an experiment configuration before anything is computed
"""

import numpy as np
from lfp_lab.datatypes.lfp_types import Finding
from lfp_lab.datatypes.general_types import ZeroModePolicy
from lfp_lab.configuration.config import ExperimentConfig, experiment_names
from lfp_lab.lfp_exceptions import LfpException
from lfp_lab.lfp_subsystem.lfp_solver import Dataset
from lfp_lab.spectral_domain.activation_spectra import activations
from lfp_lab.spectral_domain.param_model import default_regimes
from typing import List, Optional

# The bias spread in input units should be at least this fraction of the domain diameter
bias_spread_ratio = 0.25

positive_fields = [
    ('lattice', 'K'), ('lattice', 'L_prime_factor'), ('param_model', 'sigma_b'), ('param_model', 'mc_samples'),
    ('param_model', 'a2'), ('param_model', 'r'), ('nn', 'm'), ('nn', 'lr'), ('nn', 'loss_tol'),
    ('nn', 'max_steps'), ('ntk', 'samples'), ('sweep', 'n_train'), ('sweep', 'n_test'), ('sweep', 'repeats'),
]


def _is_positive(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0


def _regime_r(pm) -> Optional[float]:
    """Root mean square |w| of the configured model, None when the regime is unusable"""
    if pm.get('a2') is not None and pm.get('r') is not None:
        r = pm['r']
    else:
        r = default_regimes.get(pm.get('activation'), {}).get(pm.get('regime'), (None, None))[1]
    return float(r) if _is_positive(r) else None


def validate(config: ExperimentConfig) -> List[Finding]:
    """
    Report every problem found in a config, nothing is raised

    :param config: The resolved config
    :return: Findings with level 'error' or 'warning'
    """
    findings = []

    def error(message):
        findings.append(Finding(level='error', message=message))

    def warning(message):
        findings.append(Finding(level='warning', message=message))

    if config.experiment not in experiment_names:
        error(f'unknown experiment {config.experiment}')

    for section, key in positive_fields:
        value = getattr(config, section).get(key)
        if value is None and key in ('a2', 'r', 'lr'):
            continue
        if not _is_positive(value):
            error(f'{section}.{key} must be positive, got {value!r}')

    pm = config.param_model
    if pm.get('activation') not in activations:
        error(f'param_model.activation {pm.get("activation")!r} is not one of {sorted(activations)}')
    elif pm.get('regime') not in default_regimes[pm['activation']] and (pm.get('a2') is None or pm.get('r') is None):
        error(f'param_model.regime {pm.get("regime")!r} is unknown and a2, r are not both given')
    if pm.get('a_kind') not in ('point', 'gaussian'):
        error(f'param_model.a_kind {pm.get("a_kind")!r} must be point or gaussian')
    if pm.get('r_kind') not in ('point', 'radial_gaussian'):
        error(f'param_model.r_kind {pm.get("r_kind")!r} must be point or radial_gaussian')
    if config.lattice.get('zero_mode_policy') not in [p.value for p in ZeroModePolicy]:
        error(f'lattice.zero_mode_policy {config.lattice.get("zero_mode_policy")!r} is unknown')
    if config.nn.get('asi') and _is_positive(config.nn.get('m')) and config.nn['m'] % 2:
        error(f'nn.m={config.nn["m"]} must be even with antisymmetric initialization')

    data = config.data
    try:
        dataset = Dataset(data.get('points'), data.get('labels'), tuple(data.get('domain')))
    except (LfpException, TypeError, ValueError) as e:
        error(f'data: {e}')
    else:
        # Kinks of a neuron sit at -b / r, so sigma_b / r is the bias spread in input units
        diameter = (dataset.Domain[1] - dataset.Domain[0]) * np.sqrt(dataset.d)
        sigma_b = pm.get('sigma_b')
        r = _regime_r(pm)
        if _is_positive(sigma_b) and r is not None:
            spread = sigma_b / r
            if spread / diameter < bias_spread_ratio:
                warning(f'sigma_b={sigma_b} puts the kinks within {spread:.2g} of the origin, only '
                        f'{spread / diameter:.2g} times the domain diameter, the spectral weight assumes they '
                        f'cover the data')

    sweep = config.sweep
    n_train = sweep.get('n_train')
    for v in sweep.get('v') or []:
        if _is_positive(n_train) and 2 * v >= n_train:
            error(f'Nyquist: frequency v={v} needs 2v < n_train={n_train}')
    delta = sweep.get('delta')
    if not (isinstance(delta, (int, float)) and 0 < delta < 1):
        error(f'sweep.delta must lie in (0, 1), got {delta!r}')
    if sweep.get('learner') not in ('lfp', 'nn'):
        error(f'sweep.learner {sweep.get("learner")!r} must be lfp or nn')
    unknown_oracles = set(config.oracles) - {'nn', 'ntk', 'spline'}
    if unknown_oracles:
        error(f'unknown oracles {sorted(unknown_oracles)}')
    return findings
