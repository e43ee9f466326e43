"""
Base configuration for the DiscoGraMS pipeline
"""

import os


class Config:
    """Base configuration class with common settings"""

    PROFILE = 'base'

    # Runtime settings
    LOG_LEVEL = os.environ.get('DISCOGRAMS_LOG_LEVEL', 'INFO')
    SEED = int(os.environ.get('DISCOGRAMS_SEED', 13))
    WORKERS = int(os.environ.get('DISCOGRAMS_WORKERS', 1))

    # Sentence-encoder stand-in
    EMBED_DIM = int(os.environ.get('DISCOGRAMS_EMBED_DIM', 768))
    EMBED_SEED = 0
    INCLUDE_HEADING = False
    INCLUDE_MENTIONS = False

    # Architecture
    ARCH_DIM = int(os.environ.get('DISCOGRAMS_ARCH_DIM', 128))
    CHUNK_DIM = 64
    CHUNK_HEADS = 4
    MAX_TOKENS = 128
    POOL_HEADS = 8
    FUSION_HEADS = 8
    GAT_LAYERS = 2
    GAT_HEADS = 4
    GAT_HIDDEN = 32
    DECODER_LAYERS = 2
    DECODER_HEADS = 8
    DECODER_FF = 256
    MAX_TARGET_LEN = 64

    # Dropouts
    ENCODER_DROPOUT = 0.15
    FUSION_DROPOUT = 0.15
    GAT_DROPOUT = 0.15
    DECODER_DROPOUT = 0.15

    # Optimisation
    LEARNING_RATE = 1e-5
    EPOCHS = 20
    MAX_STEPS = None
    ADAM_BETA1 = 0.9
    ADAM_BETA2 = 0.999
    ADAM_EPS = 1e-8

    # Vocabulary
    SOURCE_MIN_FREQ = 2
    TARGET_MIN_FREQ = 1

    # Extractive baseline
    TEXTRANK_DAMPING = 0.85
    TEXTRANK_THRESHOLD = 0.1
    TEXTRANK_TOL = 1e-8
    TEXTRANK_MAX_ITER = 200

    # Character analysis
    KMEANS_K = 3
    KMEANS_MAX_ITER = 100

    @classmethod
    def lgat_settings(cls) -> dict:
        """Model and training fields consumed by ``LgatConfig``"""
        return {
            'profile': cls.PROFILE,
            'seed': cls.SEED,
            'workers': cls.WORKERS,
            'embed_dim': cls.EMBED_DIM,
            'arch_dim': cls.ARCH_DIM,
            'chunk_dim': cls.CHUNK_DIM,
            'chunk_heads': cls.CHUNK_HEADS,
            'max_tokens': cls.MAX_TOKENS,
            'pool_heads': cls.POOL_HEADS,
            'fusion_heads': cls.FUSION_HEADS,
            'gat_layers': cls.GAT_LAYERS,
            'gat_heads': cls.GAT_HEADS,
            'gat_hidden': cls.GAT_HIDDEN,
            'decoder_layers': cls.DECODER_LAYERS,
            'decoder_heads': cls.DECODER_HEADS,
            'decoder_ff': cls.DECODER_FF,
            'max_target_len': cls.MAX_TARGET_LEN,
            'encoder_dropout': cls.ENCODER_DROPOUT,
            'fusion_dropout': cls.FUSION_DROPOUT,
            'gat_dropout': cls.GAT_DROPOUT,
            'decoder_dropout': cls.DECODER_DROPOUT,
            'learning_rate': cls.LEARNING_RATE,
            'epochs': cls.EPOCHS,
            'max_steps': cls.MAX_STEPS,
            'adam_beta1': cls.ADAM_BETA1,
            'adam_beta2': cls.ADAM_BETA2,
            'adam_eps': cls.ADAM_EPS,
            'source_min_freq': cls.SOURCE_MIN_FREQ,
            'target_min_freq': cls.TARGET_MIN_FREQ,
            'include_heading': cls.INCLUDE_HEADING,
            'include_mentions': cls.INCLUDE_MENTIONS,
            'embed_seed': cls.EMBED_SEED,
        }
