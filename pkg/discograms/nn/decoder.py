"""
Transformer summary decoder conditioned on a single fused memory vector.
"""

import logging
from typing import List, Sequence

import numpy as np

from discograms.core.tensor import Tensor, causal_mask, cross_entropy, dropout, no_grad
from discograms.nn.layers import (
    Embedding, FeedForward, LayerNorm, Linear, Module, MultiHeadAttention, sinusoidal_positions
)
from discograms.nn.vocab import Vocabulary
from discograms.utils.exceptions import LengthExceeded, ShapeMismatch

logger = logging.getLogger(__name__)


class DecoderLayer(Module):
    """Post-norm block: causal self-attention, cross-attention over memory, feed-forward."""

    def __init__(self, dim: int, heads: int, ff: int, p: float, rng: np.random.Generator):
        self.self_attention = MultiHeadAttention(dim, heads, p, rng)
        self.norm1 = LayerNorm(dim)
        self.cross_attention = MultiHeadAttention(dim, heads, p, rng)
        self.norm2 = LayerNorm(dim)
        self.ffn = FeedForward(dim, ff, p, rng)
        self.norm3 = LayerNorm(dim)
        self.p = p
        self.rng = rng

    def __call__(self, x: Tensor, memory: Tensor, mask: Tensor) -> Tensor:
        x = self.norm1(x + dropout(self.self_attention(x, x, x, mask), self.p, self.training, self.rng))
        x = self.norm2(x + dropout(self.cross_attention(x, memory, memory), self.p, self.training, self.rng))
        return self.norm3(x + dropout(self.ffn(x), self.p, self.training, self.rng))


class SummaryDecoder(Module):
    """
    Token embedding plus sinusoidal positions, ``layers`` decoder blocks and
    a projection to vocabulary logits.

    Sequences are ``[bos] + target`` on input and ``target + [eos]`` on
    output, so a target may hold at most ``max_len - 1`` tokens.
    """

    def __init__(self, vocab: Vocabulary, dim: int, layers: int, heads: int, ff: int, max_len: int,
                 p: float, rng: np.random.Generator):
        self.vocab = vocab
        self.dim = dim
        self.max_len = max_len
        self.embedding = Embedding(len(vocab), dim, rng)
        self.layers = [DecoderLayer(dim, heads, ff, p, rng) for _ in range(layers)]
        self.projection = Linear(dim, len(vocab), rng)
        self.p = p
        self.rng = rng
        self.positions = sinusoidal_positions(max_len, dim)

    def __call__(self, memory: Tensor, ids: Sequence[int]) -> Tensor:
        """
        Logits for every position of ``ids``.

        Args:
            memory: [1, A] fused encoding
            ids: Decoder input ids, at most max_len of them

        Returns:
            [len(ids), V] logits
        """
        if memory.shape != (1, self.dim):
            raise ShapeMismatch(f"Decoder memory must be [1, {self.dim}], got {list(memory.shape)}")
        n = len(ids)
        if n > self.max_len:
            raise LengthExceeded(f"Decoder input of {n} tokens exceeds max length {self.max_len}",
                                 {'length': n, 'max_len': self.max_len})
        x = self.embedding(ids) + Tensor(self.positions[:n])
        x = dropout(x, self.p, self.training, self.rng)
        mask = causal_mask(n)
        for layer in self.layers:
            x = layer(x, memory, mask)
        return self.projection(x)

    def target_ids(self, tokens: Sequence[str]) -> List[int]:
        """
        Encode a target strictly.

        Raises:
            VocabularyMiss: If a token is not in the target vocabulary
            LengthExceeded: If the target does not fit the decoder
        """
        if len(tokens) + 1 > self.max_len:
            raise LengthExceeded(
                f"Target of {len(tokens)} tokens exceeds max target length {self.max_len - 1}",
                {'length': len(tokens), 'max_len': self.max_len}
            )
        return self.vocab.encode(tokens, strict=True)

    def loss(self, memory: Tensor, tokens: Sequence[str]) -> Tensor:
        """Teacher-forced mean cross-entropy of ``tokens`` followed by eos."""
        ids = self.target_ids(tokens)
        logits = self(memory, [self.vocab.bos_id] + ids)
        return cross_entropy(logits, ids + [self.vocab.eos_id])

    def greedy(self, memory: Tensor, max_len: int = None) -> List[int]:
        """
        Greedy argmax generation, stopping at eos or the length cap.

        Returns:
            Generated ids without bos or eos
        """
        limit = min(max_len or self.max_len, self.max_len)
        ids = [self.vocab.bos_id]
        out: List[int] = []
        with no_grad():
            while len(out) < limit - 1:
                logits = self(memory, ids)
                next_id = int(np.argmax(logits.data[-1]))
                if next_id == self.vocab.eos_id:
                    break
                out.append(next_id)
                ids.append(next_id)
        logger.debug(f"Greedy decode produced {len(out)} tokens")
        return out
