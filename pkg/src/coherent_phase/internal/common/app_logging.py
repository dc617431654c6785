"""Logging setup for the coherent_phase package.

Standard output carries the JSON documents of the command line harness, so log records and the
notice about the chosen level go to standard error. The format names the process because
verification trials may run in a process pool.
"""

import logging
import os
import sys
from enum import Enum
from typing import Dict, Optional, TextIO

CONFIGURED_LOGGERS: Dict[str, logging.Logger] = {}
LOG_FORMAT = (
    "%(asctime)s [%(name)s][%(processName)s][%(filename)s:%(lineno)d][%(levelname)s]: %(message)s"
)
LOG_LEVEL_VARIABLE = "LOG_LEVEL"


class LogLevel(Enum):
    """Log levels that may be requested through LOG_LEVEL."""

    DEBUG = logging.DEBUG
    INFO = logging.INFO
    WARNING = logging.WARNING
    ERROR = logging.ERROR

    @staticmethod
    def parse(value: str) -> "LogLevel":
        """
        Parse a log level name, case insensitive.

        Parameters
        ----------
        value : str
            Level name; "warn" and "err" are accepted as well.

        Returns
        -------
        LogLevel
            The matching level.
        """
        aliases = {"warn": LogLevel.WARNING, "err": LogLevel.ERROR}
        lowered = value.strip().lower()
        if lowered in aliases:
            return aliases[lowered]
        try:
            return LogLevel[lowered.upper()]
        except KeyError:
            raise ValueError(f"Value {value} is not a valid log level.") from None

    @staticmethod
    def from_env(default: str = "INFO") -> "LogLevel":
        """
        Read the level from the LOG_LEVEL environment variable.

        Parameters
        ----------
        default : str
            Level used when the variable is not set.

        Returns
        -------
        LogLevel
            The requested level.
        """
        return LogLevel.parse(os.environ.get(LOG_LEVEL_VARIABLE, default))


def setup_logging(
    log_level: LogLevel, logger_name: Optional[str], stream: Optional[TextIO] = None
) -> logging.Logger:
    """
    Attach a single stderr handler to the root logger and set the level of a named logger.

    Parameters
    ----------
    log_level : LogLevel
        Level of the named logger. Only the first call per name takes effect.
    logger_name : Optional[str]
        Name of the logger, None for the root logger.
    stream : Optional[TextIO]
        Stream of the root handler, standard error if not given.

    Returns
    -------
    logging.Logger
        The configured logger.
    """
    if "" not in CONFIGURED_LOGGERS:
        root_logger = logging.getLogger()
        root_logger.setLevel(LogLevel.DEBUG.value)
        handler = logging.StreamHandler(stream if stream is not None else sys.stderr)
        handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT))
        root_logger.addHandler(handler)
        CONFIGURED_LOGGERS[""] = root_logger

    name = logger_name if logger_name else ""
    logger = logging.getLogger(logger_name)
    if name not in CONFIGURED_LOGGERS:
        print(f"Using log level {log_level.name} for logger '{name}'", file=sys.stderr)
        logger.setLevel(log_level.value)
        CONFIGURED_LOGGERS[name] = logger
    return logger
