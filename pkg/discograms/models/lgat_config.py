"""
LGAT model and training configuration.
"""

import hashlib
import json
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


DESK_PROFILES = ('desk', 'testing')
DESK_MAX_ARCH_DIM = 512


class LgatConfig(BaseModel):
    """
    Validated hyperparameters for the LGAT stack

    Built from a profile in ``config/`` and overlaid with a JSON file and
    command-line flags (see ``discograms.config.load_settings``).
    """

    model_config = ConfigDict(extra='forbid', frozen=True)

    profile: str = 'desk'
    seed: int = 13
    workers: int = Field(1, ge=1)

    embed_dim: int = Field(768, gt=0)
    embed_seed: int = 0
    include_heading: bool = False
    include_mentions: bool = False

    arch_dim: int = Field(128, gt=0)
    chunk_dim: int = Field(64, gt=0)
    chunk_heads: int = Field(4, gt=0)
    max_tokens: int = Field(128, ge=1)
    pool_heads: int = Field(8, gt=0)
    fusion_heads: int = Field(8, gt=0)
    gat_layers: int = Field(2, ge=1)
    gat_heads: int = Field(4, gt=0)
    gat_hidden: int = Field(32, gt=0)
    decoder_layers: int = Field(2, ge=1)
    decoder_heads: int = Field(8, gt=0)
    decoder_ff: int = Field(256, gt=0)
    max_target_len: int = Field(64, ge=1)

    encoder_dropout: float = Field(0.15, ge=0.0, lt=1.0)
    fusion_dropout: float = Field(0.15, ge=0.0, lt=1.0)
    gat_dropout: float = Field(0.15, ge=0.0, lt=1.0)
    decoder_dropout: float = Field(0.15, ge=0.0, lt=1.0)

    learning_rate: float = Field(1e-5, ge=0.0)
    epochs: int = Field(20, ge=1)
    max_steps: Optional[int] = Field(None, ge=1)
    adam_beta1: float = Field(0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(1e-8, gt=0.0)

    source_min_freq: int = Field(2, ge=1)
    target_min_freq: int = Field(1, ge=1)

    @model_validator(mode='after')
    def _check_dimensions(self) -> 'LgatConfig':
        pairs = [
            ('chunk_dim', self.chunk_dim, 'chunk_heads', self.chunk_heads),
            ('arch_dim', self.arch_dim, 'pool_heads', self.pool_heads),
            ('arch_dim', self.arch_dim, 'fusion_heads', self.fusion_heads),
            ('arch_dim', self.arch_dim, 'decoder_heads', self.decoder_heads),
        ]
        for dim_name, dim, heads_name, heads in pairs:
            if dim % heads:
                raise ValueError(f"{dim_name}={dim} is not divisible by {heads_name}={heads}")
        if self.profile in DESK_PROFILES and self.arch_dim > DESK_MAX_ARCH_DIM:
            raise ValueError(
                f"{self.profile} profile requires arch_dim <= {DESK_MAX_ARCH_DIM}, got {self.arch_dim}"
            )
        return self

    def to_json(self) -> str:
        """Canonical JSON (sorted keys, compact separators)."""
        return json.dumps(self.model_dump(), sort_keys=True, separators=(',', ':'))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode('utf-8')).hexdigest()
