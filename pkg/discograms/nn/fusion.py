"""
Encoding integration: attend over the (graph, text) pair and collapse 2A to A.
"""

import numpy as np

from discograms.core.tensor import Tensor, concat, dropout, relu
from discograms.nn.layers import Linear, Module, MultiHeadAttention
from discograms.utils.exceptions import ShapeMismatch


class FusionBlock(Module):
    """
    Self-attention over the two-element sequence [graph; text], flattened to
    [1, 2A] and mapped back to [1, A] by Linear, ReLU, Linear.
    """

    def __init__(self, arch_dim: int, heads: int, p: float, rng: np.random.Generator):
        self.arch_dim = arch_dim
        self.attention = MultiHeadAttention(arch_dim, heads, p, rng)
        self.collapse = Linear(2 * arch_dim, arch_dim, rng)
        self.output = Linear(arch_dim, arch_dim, rng)
        self.p = p
        self.rng = rng

    def __call__(self, graph_enc: Tensor, text_enc: Tensor) -> Tensor:
        expected = (1, self.arch_dim)
        if graph_enc.shape != expected or text_enc.shape != expected:
            raise ShapeMismatch(f"Fusion expects two {list(expected)} inputs, got "
                                f"{list(graph_enc.shape)} and {list(text_enc.shape)}")
        pair = concat([graph_enc, text_enc], axis=0)
        mixed = self.attention(pair, pair, pair).reshape(1, 2 * self.arch_dim)
        hidden = dropout(relu(self.collapse(mixed)), self.p, self.training, self.rng)
        return self.output(hidden)
