'''File config loader'''

import os
import logging
import traceback
import yaml

from siaf.sim.errors import ConfigError

logger = logging.getLogger(__name__)  # pylint: disable=C0103


def load_config_from_file(filepath: str) -> dict:
    """
    Returns the config loaded from a simulator config file. A missing or
    malformed file is a ConfigError, never a silent fallback to defaults.
    """
    logger.debug('Loading simulator config from %s', filepath)
    path = os.path.abspath(filepath)
    try:
        with open(path, 'r', encoding="utf8") as file:
            from_file_config = yaml.safe_load(file)
    except OSError as err:
        raise ConfigError(f'cannot read config file: {err.strerror}', path) from err
    except yaml.YAMLError as err:
        logger.debug('Failed to parse %s: exception=%s, stacktrace=%s', path, err, traceback.format_exc())
        raise ConfigError(f'malformed YAML: {err}', path) from err
    if from_file_config is None:
        return {}
    if not isinstance(from_file_config, dict):
        raise ConfigError('config file must hold a mapping', path)
    logger.debug('Successfully load config from %s', path)
    return from_file_config
