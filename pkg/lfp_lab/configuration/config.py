"""
config.py – Experiment configuration: system defaults, user overlay and the validated ExperimentConfig
"""
import copy
import logging
import yaml
from dataclasses import dataclass, field, asdict
from pathlib import Path
from lfp_lab.lfp_exceptions import (ConfigFileOpen, UnknownConfigKey, UnknownExperiment, InvalidConfigValue)
from typing import Dict, List, Optional

experiment_names = ('fig2_relu_cubic', 'fig2_relu_linear', 'fig2d_xor', 'fig_tanh', 'theorem2_check',
                    'spline_check', 'freq_sweep', 'kernel_check')

# Allowed keys of each nested section
section_keys = {
    'lattice': {'K', 'L_prime_factor', 'zero_mode_policy'},
    'param_model': {'activation', 'regime', 'a2', 'r', 'a_kind', 'r_kind', 'sigma_b', 'mc_samples'},
    'nn': {'m', 'lr', 'loss_tol', 'max_steps', 'asi'},
    'ntk': {'samples'},
    'sweep': {'v', 'n_train', 'n_test', 'learner', 'delta', 'repeats'},
    'data': {'points', 'labels', 'domain'},
}
schema_version = 1


def deep_merge(base: Dict, overlay: Optional[Dict]) -> Dict:
    """Overlay nested dicts on top of base without modifying either"""
    merged = copy.deepcopy(base)
    for key, value in (overlay or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class Config:
    """
    Here we overlay user configuration on top of built in system configuration.
    """
    logger = logging.getLogger(__name__)

    # Where we look for system configuration data
    system_config_home = Path(__file__).parent

    # Where we look for the user supplied configuration data, if any
    user_config_home = Path.home() / '.lfp_lab' / 'config'

    config_name = 'experiments.yaml'

    def __init__(self):
        """
        Load system defaults and any user overlay
        """
        self.System = load_yaml(self.system_config_home / self.config_name)
        user_file = self.user_config_home / self.config_name
        try:
            with open(user_file, 'r') as ucf:
                self.User = yaml.safe_load(ucf) or {}
        except FileNotFoundError:
            self.logger.info(f"No user config file found. [{user_file}]  Using system config only.")
            self.User = {}

    def experiment_defaults(self, name: str) -> Dict:
        """
        Resolved defaults for one experiment, system then user, common section first

        :param name: Experiment name
        :return: A plain dict in ExperimentConfig layout
        """
        if name not in experiment_names:
            raise UnknownExperiment(name)
        resolved = {}
        for layer in (self.System, self.User):
            resolved = deep_merge(resolved, layer.get('common'))
            resolved = deep_merge(resolved, (layer.get('experiments') or {}).get(name))
        resolved['experiment'] = name
        return resolved


def load_yaml(path) -> Dict:
    """Read a YAML (or JSON) mapping"""
    try:
        with open(path, 'r') as f:
            doc = yaml.safe_load(f)
    except (OSError, yaml.YAMLError):
        raise ConfigFileOpen(path) from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigFileOpen(path)
    return doc


@dataclass
class ExperimentConfig:
    """
    Everything one experiment run depends on

    Sections are plain dicts whose keys are checked against section_keys. to_dict and from_dict round trip.
    """
    experiment: str
    schema: int = schema_version
    seed: int = 0
    lattice: Dict = field(default_factory=dict)
    param_model: Dict = field(default_factory=dict)
    nn: Dict = field(default_factory=dict)
    ntk: Dict = field(default_factory=dict)
    sweep: Dict = field(default_factory=dict)
    data: Dict = field(default_factory=dict)
    oracles: List[str] = field(default_factory=list)
    output_dir: str = 'lfp_output'

    @classmethod
    def from_dict(cls, doc: Dict) -> 'ExperimentConfig':
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise UnknownConfigKey('top level', unknown)
        if doc.get('experiment') not in experiment_names:
            raise UnknownExperiment(doc.get('experiment'))
        if doc.get('schema', schema_version) != schema_version:
            raise InvalidConfigValue('schema', doc.get('schema'), f'is not supported, expected {schema_version}')
        for section, keys in section_keys.items():
            extra = set(doc.get(section) or {}) - keys
            if extra:
                raise UnknownConfigKey(section, extra)
        return cls(**copy.deepcopy(doc))

    def to_dict(self) -> Dict:
        return asdict(self)


def resolve_config(path=None, experiment: Optional[str] = None, overrides: Optional[Dict] = None) -> ExperimentConfig:
    """
    Build the ExperimentConfig for a run

    Order: system defaults for the experiment, user overlay, config file, command line overrides.

    :param path: Config file (YAML or JSON), optional
    :param experiment: Experiment name when no file names one
    :param overrides: Nested dict applied last
    :return: Validated config
    """
    file_doc = load_yaml(path) if path else {}
    name = experiment or file_doc.get('experiment')
    if name is None:
        raise InvalidConfigValue('experiment', None, 'must be named in the config file or on the command line')
    resolved = deep_merge(Config().experiment_defaults(name), file_doc)
    resolved = deep_merge(resolved, overrides)
    resolved['experiment'] = name
    return ExperimentConfig.from_dict(resolved)
