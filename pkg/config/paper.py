"""
Paper-scale configuration for the DiscoGraMS pipeline

Full-size dimensions (A = 4096, 1024-wide chunk encoder, 2284-token targets).
They need far more memory than a desk machine has and exist so the wiring can
be inspected at full size.
"""

from .base import Config


class PaperConfig(Config):
    """Full-size hyperparameters, also registered as `large`"""

    PROFILE = 'paper'

    EMBED_DIM = 768
    ARCH_DIM = 4096
    CHUNK_DIM = 1024
    CHUNK_HEADS = 8
    MAX_TOKENS = 4096
    POOL_HEADS = 8
    FUSION_HEADS = 8
    GAT_HEADS = 8
    GAT_HIDDEN = 512
    DECODER_LAYERS = 6
    DECODER_HEADS = 8
    DECODER_FF = 8192
    MAX_TARGET_LEN = 2284

    LEARNING_RATE = 1e-5
    EPOCHS = 20
