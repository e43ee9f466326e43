"""
Logging configuration and utilities for the DiscoGraMS pipeline.

Log records go to stderr so that commands can print JSON on stdout.
"""

import logging
import sys
from typing import Optional, TextIO


LOG_FORMAT = '[%(asctime)s] %(levelname)s in %(name)s: %(message)s'

# Third-party loggers that are chatty at INFO
QUIET_LOGGERS = ('absl', 'matplotlib', 'pydot')


def get_logger(name: str, level: Optional[str] = None, stream: Optional[TextIO] = None) -> logging.Logger:
    """
    Get a logger with a single stream handler.

    Args:
        name: Logger name (typically __name__)
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        stream: Handler stream, stderr by default

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    if level:
        logger.setLevel(level.upper())
    elif logger.level == logging.NOTSET:
        logger.setLevel(logging.INFO)

    if not logger.handlers:
        handler = logging.StreamHandler(stream or sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    return logger


def setup_logging(level: str = 'INFO') -> logging.Logger:
    """
    Configure the ``discograms`` logger tree for a command-line run.

    Args:
        level: Log level name

    Returns:
        The package root logger
    """
    package = logging.getLogger('discograms')
    # sys.stderr may have been swapped since an earlier run created the handler
    for handler in list(package.handlers):
        if isinstance(handler, logging.StreamHandler) and handler.stream is not sys.stderr:
            package.removeHandler(handler)
    root = get_logger('discograms', level)
    root.propagate = False
    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
    return root
