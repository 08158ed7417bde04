# Logging configuration utilities
# Standard logging setup for shnolkit; SHNOLKIT_LOG_LEVEL sets the default verbosity

import logging
import os
import sys
from typing import Optional

LOG_LEVEL_ENV = 'SHNOLKIT_LOG_LEVEL'


def default_level(fallback: str = "INFO") -> str:
    """Level from SHNOLKIT_LOG_LEVEL, or fallback when unset"""
    return os.environ.get(LOG_LEVEL_ENV, fallback) or fallback


def setup_logger(level: Optional[str] = None,
                 name: Optional[str] = None,
                 format_str: Optional[str] = None) -> logging.Logger:
    """Setup logging configuration"""

    if not format_str:
        format_str = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    # Explicit level wins over the environment
    numeric_level = getattr(logging, (level or default_level()).upper(), logging.INFO)

    logger = logging.getLogger(name or 'shnolkit')
    logger.setLevel(numeric_level)

    # Remove existing handlers to avoid duplicates
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(numeric_level)
    handler.setFormatter(logging.Formatter(format_str))
    logger.addHandler(handler)

    return logger
