"""
Testing configuration for the DiscoGraMS pipeline
"""

from .base import Config


class TestingConfig(Config):
    """Tiny dimensions and quiet logging for the test suite"""

    PROFILE = 'testing'

    LOG_LEVEL = 'ERROR'  # Only log errors during testing
    SEED = 7

    EMBED_DIM = 16
    ARCH_DIM = 16
    CHUNK_DIM = 8
    CHUNK_HEADS = 2
    MAX_TOKENS = 16
    POOL_HEADS = 2
    FUSION_HEADS = 2
    GAT_LAYERS = 2
    GAT_HEADS = 2
    GAT_HIDDEN = 4
    DECODER_LAYERS = 1
    DECODER_HEADS = 2
    DECODER_FF = 16
    MAX_TARGET_LEN = 24

    ENCODER_DROPOUT = 0.0
    FUSION_DROPOUT = 0.0
    GAT_DROPOUT = 0.0
    DECODER_DROPOUT = 0.0

    LEARNING_RATE = 1e-3
    EPOCHS = 2
