"""
Chunked text encoding: split the script into token chunks, encode each chunk
to one vector, then attend across chunks and pool to a single [1, A] vector.
"""

from typing import List, Sequence

import numpy as np

from discograms.core.tensor import Tensor, concat, dropout, xavier_uniform
from discograms.nn.layers import (
    Embedding, FeedForward, LayerNorm, Linear, Module, MultiHeadAttention, sinusoidal_positions
)
from discograms.nn.vocab import Vocabulary
from discograms.utils.exceptions import ShapeMismatch
from discograms.utils.helpers import whitespace_tokens


def chunk_script(text: str, max_tokens: int) -> List[List[str]]:
    """
    Greedily split whitespace tokens into chunks of ``max_tokens``.

    Args:
        text: Screenplay text
        max_tokens: Chunk size, at least 1

    Returns:
        Chunks in order; only the last may be shorter, and empty text gives [[]]
    """
    if max_tokens < 1:
        raise ValueError(f"max_tokens must be at least 1, got {max_tokens}")
    tokens = whitespace_tokens(text)
    if not tokens:
        return [[]]
    return [tokens[i:i + max_tokens] for i in range(0, len(tokens), max_tokens)]


class ChunkEncoder(Module):
    """
    Token embedding plus positions, one post-norm self-attention encoder layer,
    then the mean over tokens: one [1, E] vector per chunk.
    """

    def __init__(self, vocab_size: int, dim: int, heads: int, max_tokens: int, p: float,
                 rng: np.random.Generator):
        self.dim = dim
        self.max_tokens = max_tokens
        self.embedding = Embedding(vocab_size, dim, rng)
        self.attention = MultiHeadAttention(dim, heads, p, rng)
        self.norm1 = LayerNorm(dim)
        self.ffn = FeedForward(dim, 2 * dim, p, rng)
        self.norm2 = LayerNorm(dim)
        self.p = p
        self.rng = rng
        self.positions = sinusoidal_positions(max_tokens, dim)

    def __call__(self, ids: Sequence[int]) -> Tensor:
        ids = list(ids) or [Vocabulary.pad_id]
        if len(ids) > self.max_tokens:
            raise ShapeMismatch(f"Chunk of {len(ids)} tokens exceeds max_tokens={self.max_tokens}")
        x = self.embedding(ids) + Tensor(self.positions[:len(ids)])
        x = dropout(x, self.p, self.training, self.rng)
        x = self.norm1(x + dropout(self.attention(x, x, x), self.p, self.training, self.rng))
        x = self.norm2(x + dropout(self.ffn(x), self.p, self.training, self.rng))
        return x.mean(axis=0, keepdims=True)


class ChunkPooler(Module):
    """
    Projects chunk encodings to A, applies multi-head self-attention across
    chunks, then pools with a learned query to exactly [1, A].
    """

    def __init__(self, chunk_dim: int, arch_dim: int, heads: int, p: float, rng: np.random.Generator):
        self.arch_dim = arch_dim
        self.proj = Linear(chunk_dim, arch_dim, rng)
        self.attention = MultiHeadAttention(arch_dim, heads, p, rng)
        self.norm = LayerNorm(arch_dim)
        self.query = xavier_uniform((1, arch_dim), rng)
        self.pool = MultiHeadAttention(arch_dim, heads, p, rng)

    def __call__(self, chunks: Tensor) -> Tensor:
        if chunks.ndim != 2 or chunks.shape[0] < 1:
            raise ShapeMismatch(f"Chunk pooler needs [k >= 1, E] input, got {list(chunks.shape)}")
        h = self.proj(chunks)
        h = self.norm(h + self.attention(h, h, h))
        return self.pool(self.query, h, h)


class TextEncoder(Module):
    """Chunk encoder followed by the chunk pooler."""

    def __init__(self, vocab: Vocabulary, chunk_dim: int, chunk_heads: int, max_tokens: int,
                 arch_dim: int, pool_heads: int, p: float, rng: np.random.Generator):
        self.vocab = vocab
        self.chunk_encoder = ChunkEncoder(len(vocab), chunk_dim, chunk_heads, max_tokens, p, rng)
        self.pooler = ChunkPooler(chunk_dim, arch_dim, pool_heads, p, rng)

    def encode_chunks(self, chunks: Sequence[Sequence[str]]) -> Tensor:
        if not chunks:
            raise ShapeMismatch("Text encoding needs at least one chunk")
        rows = [self.chunk_encoder(self.vocab.encode(chunk)) for chunk in chunks]
        return concat(rows, axis=0)

    def __call__(self, chunks: Sequence[Sequence[str]]) -> Tensor:
        return self.pooler(self.encode_chunks(chunks))

