"""
Simulator configuration logic that pulls in values from a defaults dict, a
config file, the sections embedded in the model file and environment
variables, in that order.
"""
import copy
import logging
from typing import Optional

from siaf.env_var_settings import get_env_value
from siaf.sim.accel import AccelConfig
from siaf.sim.config.default import DEFAULT_SIM_CONFIG
from siaf.sim.errors import ConfigError
from siaf.sim.memory import BankSet, EnergyModel, default_budget
from siaf.sim.scheduler import PARALLEL, SERIAL
from .file import load_config_from_file
from .environment import load_config_from_env

TRACING_EXPORTERS = ('none', 'console', 'otlp', 'otlp_http')

# Initialize logger
logger = logging.getLogger(__name__)  # pylint: disable=C0103


def merge_config(base_config: dict, overriding_config: dict) -> dict:
    """
    Returns the merged result of two configs recursively
    """
    for key in overriding_config:
        if key in base_config and isinstance(base_config[key], dict) \
                and isinstance(overriding_config[key], dict):
            base_config[key] = merge_config(base_config[key], overriding_config[key])
        else:
            base_config[key] = overriding_config[key]
    return base_config


def _read_from_file(config_file: Optional[str]) -> Optional[dict]:
    config_file = config_file if config_file is not None else get_env_value('CONFIG_FILE')
    if config_file is None:
        logger.debug("no config file found")
        return None
    if len(config_file) == 0:
        # SIAF_CONFIG_FILE can be passed as empty string which is invalid
        raise ConfigError('config file path is empty', 'SIAF_CONFIG_FILE')
    return load_config_from_file(config_file)


class SimConfig:
    '''A wrapper around the simulator configuration logic'''

    def __init__(self, config_file: Optional[str] = None, model_sections: Optional[dict] = None,
                 overrides: Optional[dict] = None):
        """
        Layers, lowest first: DEFAULT_SIM_CONFIG, the config file (explicit
        path or SIAF_CONFIG_FILE), sections embedded in the model file,
        SIAF_* environment variables, then overrides (command-line flags).
        """
        config_dict = copy.deepcopy(DEFAULT_SIM_CONFIG)
        file_dict = _read_from_file(config_file)
        if file_dict is not None:
            config_dict = merge_config(config_dict, file_dict)
        if model_sections:
            config_dict = merge_config(config_dict, copy.deepcopy(model_sections))
        config_dict = merge_config(config_dict, load_config_from_env())
        if overrides:
            config_dict = merge_config(config_dict, overrides)
        self.config = config_dict
        self._validate()
        logger.debug("Config init complete - config state: %s", config_dict)

    def _validate(self) -> None:
        if self.schedule_kind not in (SERIAL, PARALLEL):
            raise ConfigError(f'unknown schedule {self.schedule_kind!r}, expected serial or parallel',
                              'schedule.kind')
        if self.tracing_exporter not in TRACING_EXPORTERS:
            raise ConfigError(f'unknown exporter {self.tracing_exporter!r}, expected one of '
                              f'{list(TRACING_EXPORTERS)}', 'tracing.exporter')
        for section in ('accelerator', 'memory', 'energy', 'tracing', 'schedule'):
            if not isinstance(self.config.get(section), dict):
                raise ConfigError('section must be a mapping', section)
        # fail early on bad values
        self.accel_config()
        self.energy_model()
        self.bank_set()

    def accel_config(self) -> AccelConfig:
        '''AccelConfig from the accelerator section'''
        return AccelConfig.from_dict(self.config['accelerator'])

    def energy_model(self) -> EnergyModel:
        '''EnergyModel from the energy section'''
        return EnergyModel.from_dict(self.config['energy'])

    @property
    def bank_config(self) -> dict:
        '''memory.banks section'''
        return self.config['memory'].get('banks') or {}

    def bank_set(self, membrane_bytes: int = 0) -> BankSet:
        '''fresh, zeroed banks for one run'''
        return default_budget(self.bank_config, membrane_bytes,
                              int(self.config['memory'].get('off_chip_word_bits', 64)))

    @property
    def schedule_kind(self) -> str:
        '''serial or parallel'''
        return str(self.config['schedule'].get('kind', PARALLEL)).lower()

    @property
    def time_steps(self) -> Optional[int]:
        '''time step override, None keeps the model's own'''
        value = self.config['schedule'].get('time_steps')
        return None if value is None else int(value)

    @property
    def tracing_exporter(self) -> str:
        '''none, console, otlp or otlp_http'''
        return str(self.config['tracing'].get('exporter') or 'none').lower()

    @property
    def tracing_endpoint(self) -> str:
        '''collector endpoint for the otlp exporters'''
        return self.config['tracing'].get('endpoint') or ''
