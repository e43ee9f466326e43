"""
Desk configuration for the DiscoGraMS pipeline
"""

from .base import Config


class DeskConfig(Config):
    """Single-CPU profile used for acceptance runs (A <= 512)"""

    PROFILE = 'desk'
