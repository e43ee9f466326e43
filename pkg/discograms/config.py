"""
Configuration loading utilities for the DiscoGraMS pipeline

Precedence: command-line flags > JSON config file > environment > profile
defaults.
"""

import json
import os
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from config import config as PROFILES
from discograms.models.lgat_config import LgatConfig
from discograms.utils.exceptions import ConfigurationError, UnreadableFile


logger = logging.getLogger(__name__)


def load_environment_config() -> Dict[str, Any]:
    """
    Load overrides from environment variables

    Returns:
        dict: Environment configuration keyed by ``LgatConfig`` field name
    """
    env_config = {}

    env_vars = {
        'DISCOGRAMS_SEED': ('seed', int),
        'DISCOGRAMS_EMBED_DIM': ('embed_dim', int),
        'DISCOGRAMS_ARCH_DIM': ('arch_dim', int),
        'DISCOGRAMS_WORKERS': ('workers', int),
    }

    for var, (field, cast) in env_vars.items():
        value = os.environ.get(var)
        if value is not None:
            try:
                env_config[field] = cast(value)
            except ValueError as e:
                raise ConfigurationError(f"Invalid value for {var}: {value!r}") from e

    return env_config


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON config file holding a subset of ``LgatConfig`` fields

    Args:
        path: JSON file path

    Returns:
        dict: Parsed overrides
    """
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise UnreadableFile(f"Cannot read config file {path}: {e}", {'path': str(path)}) from e

    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a JSON object")
    return data


def load_settings(profile: Optional[str] = None,
                  config_file: Optional[Union[str, Path]] = None,
                  overrides: Optional[Dict[str, Any]] = None) -> LgatConfig:
    """
    Build a validated ``LgatConfig``

    Args:
        profile: Profile name (desk, paper, large, testing); None reads DISCOGRAMS_PROFILE
        config_file: Optional JSON file with field overrides
        overrides: Flag values; ``None`` entries are ignored

    Returns:
        LgatConfig: Validated configuration

    Raises:
        ConfigurationError: If the profile is unknown or a value is invalid
    """
    profile = profile or os.environ.get('DISCOGRAMS_PROFILE', 'desk')
    if profile not in PROFILES:
        raise ConfigurationError(f"Unknown profile: {profile}",
                                 {'known': sorted(k for k in PROFILES if k != 'default')})

    settings = PROFILES[profile].lgat_settings()
    settings.update(load_environment_config())
    if config_file is not None:
        settings.update(read_config_file(config_file))
    if overrides:
        settings.update({k: v for k, v in overrides.items() if v is not None})

    try:
        cfg = LgatConfig(**settings)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {e}") from e

    logger.debug(f"Configuration loaded: profile={profile} hash={cfg.config_hash[:12]}")
    return cfg
