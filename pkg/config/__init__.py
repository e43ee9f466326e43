"""
Configuration module for the DiscoGraMS pipeline

Provides different configurations for different scales:
- Desk: single CPU core, architecture dimension 128 (default)
- Paper: full-size dimensions (alias: large)
- Testing: tiny dimensions, minimal logging
"""

import os
from .base import Config
from .desk import DeskConfig
from .paper import PaperConfig
from .testing import TestingConfig


# Configuration mapping
config = {
    'desk': DeskConfig,
    'paper': PaperConfig,
    'large': PaperConfig,
    'testing': TestingConfig,
    'default': DeskConfig
}


def get_config(config_name=None):
    """
    Get configuration class based on profile name

    Args:
        config_name (str): Profile name or None to read DISCOGRAMS_PROFILE

    Returns:
        Config: Configuration class
    """
    if config_name is None:
        config_name = os.environ.get('DISCOGRAMS_PROFILE', 'desk')

    return config.get(config_name, DeskConfig)


__all__ = [
    'Config',
    'DeskConfig',
    'PaperConfig',
    'TestingConfig',
    'config',
    'get_config'
]
