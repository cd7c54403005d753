"""Common setup code for logging."""

import os
import logging
import logging.config
from typing import Any, Dict

import yaml

GOOD = logging.INFO + 1

RUN_LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s %(message)s'

COLORED_FORMATTER = 'heatwave.colored_formatter.ColoredFormatter'
CONSOLE_HANDLER = 'heatwave.logging_handler.AnsiLoggingHandler'


def default_config(level: int = logging.INFO,
                   color: bool = True,
                   timestamp: bool = False) -> Dict[str, Any]:
    """Builds the dictConfig used when no logging configuration file is found.

    All four formatter variants are declared; the single console handler
    picks the one matching `color` and `timestamp`.
    """
    formatters: Dict[str, Dict[str, str]] = {}
    for time_fmt, fmt in (('time', '%(asctime)s - %(message)s'), ('notime', '%(message)s')):
        formatters[f'{time_fmt}-nocolor'] = {'format': fmt}
        formatters[f'{time_fmt}-color'] = {'()': COLORED_FORMATTER, 'format': fmt}
    name = f"{'time' if timestamp else 'notime'}-{'color' if color else 'nocolor'}"
    level_name = logging.getLevelName(level)
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': formatters,
        'handlers': {
            name: {
                'class': CONSOLE_HANDLER,
                'level': level_name,
                'formatter': name,
            }
        },
        'root': {
            'level': level_name,
            'handlers': [name],
        },
    }


def log_setup(cfg_path='heatwave_logging.cfg',
              level=logging.INFO,
              cfg_env='HEATWAVE_LOG_CFG',
              color=True,
              timestamp=False):
    """Sets up the logging based on a YAML logging configuration file. You
    can override the path using the HEATWAVE_LOG_CFG environment variable.

    """
    value = os.getenv(cfg_env, None)
    if value:
        cfg_path = value
    if os.path.exists(cfg_path):
        with open(cfg_path, 'r', encoding='utf-8') as cfg_file:
            config = yaml.safe_load(cfg_file.read())
    else:
        config = default_config(level, color, timestamp)
    logging.config.dictConfig(config)
    logging.getLogger().setLevel(level)
    if getattr(logging, 'GOOD', None) != GOOD:
        add_logging_level('GOOD', GOOD)


def attach_run_log(directory: str) -> logging.Handler:
    """Copies root log records into directory/run.log until detached."""
    handler = logging.FileHandler(os.path.join(directory, 'run.log'), mode='w', encoding='utf-8')
    handler.setFormatter(logging.Formatter(RUN_LOG_FORMAT))
    logging.getLogger().addHandler(handler)
    return handler


def detach_run_log(handler: logging.Handler) -> None:
    """Undoes attach_run_log."""
    logging.getLogger().removeHandler(handler)
    handler.close()


def add_logging_level(level_name, level_num, method_name=None):
    """Registers level_name as a logging level with value level_num.

    The level becomes an attribute of `logging`, and `method_name`
    (default level_name.lower()) a method on the logger class and a
    module-level function, like `logging.info`. AttributeError is raised
    if any of those names is already taken.

    >>> add_logging_level('TRACE', logging.DEBUG - 5)
    >>> logging.getLogger(__name__).trace('that worked')
    """
    if not method_name:
        method_name = level_name.lower()

    for owner, attr in ((logging, level_name), (logging, method_name),
                        (logging.getLoggerClass(), method_name)):
        if hasattr(owner, attr):
            raise AttributeError(f'{attr} already defined in {owner.__name__}')

    def log_for_level(self, message, *args, **kwargs):
        if self.isEnabledFor(level_num):
            self._log(level_num, message, args, **kwargs)  # pylint: disable=protected-access

    def log_to_root(message, *args, **kwargs):
        logging.log(level_num, message, *args, **kwargs)

    logging.addLevelName(level_num, level_name)
    setattr(logging, level_name, level_num)
    setattr(logging.getLoggerClass(), method_name, log_for_level)
    setattr(logging, method_name, log_to_root)
