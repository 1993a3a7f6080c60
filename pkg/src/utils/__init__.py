"""
Utils package: settings, experiment configs, errors and the fixture gallery.
"""

from .config_parser import ExperimentConfig, LabSettings, load_experiment_config, load_settings
from .errors import ConfigError, LabError
from .fixtures import FixtureGallery

__all__ = [
    'ExperimentConfig',
    'LabSettings',
    'load_experiment_config',
    'load_settings',
    'ConfigError',
    'LabError',
    'FixtureGallery',
]
