'''Environment config loader'''

import logging

from siaf.env_var_settings import env_key, get_env_value
from siaf.sim.errors import ConfigError

logger = logging.getLogger(__name__)  # pylint: disable=C0103


def _is_true(value: str) -> bool:
    return value.lower() == 'true'


def _to_number(key: str, value: str, kind):
    try:
        return kind(value)
    except ValueError as err:
        raise ConfigError(f'{value!r} is not a valid {kind.__name__}', f'env {env_key(key)}') from err


def load_config_from_env() -> dict:
    '''Loads config from SIAF_* environment variables'''
    config = {'accelerator': {}, 'schedule': {}, 'tracing': {}}

    clock_hz = get_env_value('CLOCK_HZ')
    if clock_hz:
        logger.debug("[env] Loaded CLOCK_HZ from env")
        config['accelerator']['clock_hz'] = _to_number('CLOCK_HZ', clock_hz, float)

    sparsity_gating = get_env_value('SPARSITY_GATING')
    if sparsity_gating:
        logger.debug("[env] Loaded SPARSITY_GATING from env")
        config['accelerator']['sparsity_gating'] = _is_true(sparsity_gating)

    overlap_drain = get_env_value('OVERLAP_DRAIN')
    if overlap_drain:
        logger.debug("[env] Loaded OVERLAP_DRAIN from env")
        config['accelerator']['overlap_drain'] = _is_true(overlap_drain)

    schedule = get_env_value('SCHEDULE')
    if schedule:
        logger.debug("[env] Loaded SCHEDULE from env")
        config['schedule']['kind'] = schedule.lower()

    time_steps = get_env_value('TIMESTEPS')
    if time_steps:
        logger.debug("[env] Loaded TIMESTEPS from env")
        config['schedule']['time_steps'] = _to_number('TIMESTEPS', time_steps, int)

    exporter = get_env_value('TRACING_EXPORTER')
    if exporter:
        logger.debug("[env] Loaded TRACING_EXPORTER from env")
        config['tracing']['exporter'] = exporter.lower()

    endpoint = get_env_value('TRACING_ENDPOINT')
    if endpoint:
        logger.debug("[env] Loaded TRACING_ENDPOINT from env")
        config['tracing']['endpoint'] = endpoint

    console = get_env_value('ENABLE_CONSOLE_SPAN_EXPORTER')
    if console and _is_true(console):
        logger.debug("[env] Loaded ENABLE_CONSOLE_SPAN_EXPORTER from env")
        config['tracing']['exporter'] = 'console'

    return {key: value for key, value in config.items() if value}
