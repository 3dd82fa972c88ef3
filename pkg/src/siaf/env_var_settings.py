'''
SIAF_* environment access. No package imports here, so the config and the
logger can read variables before anything else is loaded.
'''
import os
from typing import Dict, Optional

ENV_VAR_PREFIX = 'SIAF'


def env_key(target_key: str) -> str:
    '''full variable name for a config key, e.g. TIMESTEPS -> SIAF_TIMESTEPS'''
    return f'{ENV_VAR_PREFIX}_{target_key}'


def get_env_value(target_key: str) -> Optional[str]:
    '''value of SIAF_<target_key>, None when unset'''
    return os.environ.get(env_key(target_key))


def siaf_environment() -> Dict[str, str]:
    '''every SIAF_* variable currently set'''
    prefix = f'{ENV_VAR_PREFIX}_'
    return {key: value for key, value in os.environ.items() if key.startswith(prefix)}
