"""
Logging configuration
"""
import logging
import sys
import traceback

from siaf.env_var_settings import get_env_value

_LOG_LEVEL = {
    None: logging.INFO,
    '': logging.INFO,
    'INFO': logging.INFO,
    'DEBUG': logging.DEBUG,
    'ERROR': logging.ERROR,
    'WARNING': logging.WARNING,
    'CRITICAL': logging.CRITICAL,
    'NOTSET': logging.NOTSET
}

def get_custom_logger(name: str) -> logging.Logger:
    '''Simulator logger configuration, verbosity from SIAF_LOG'''
    try:
        formatter = logging.Formatter(fmt='%(asctime)s %(levelname)-8s %(message)s',
                                      datefmt='%Y-%m-%d %H:%M:%S')
        log_level = logging.INFO
        logger_ = logging.getLogger(name)
        env_value = get_env_value('LOG')
        if env_value:
            log_level = _LOG_LEVEL.get(env_value.upper(), log_level)

        logger_.setLevel(log_level)
        # repeated calls (one per CLI invocation in tests) must not stack handlers
        if not any(getattr(h, '_siaf_handler', False) for h in logger_.handlers):
            screen_handler = logging.StreamHandler(stream=sys.stderr)
            screen_handler.setFormatter(formatter)
            screen_handler._siaf_handler = True  # pylint:disable=W0212
            logger_.addHandler(screen_handler)
        return logger_
    except Exception as err:  # pylint: disable=W0703
        print(f'Failed to customize logger: exception={err}, stacktrace={traceback.format_exc()}')
        return logging.getLogger(name)
