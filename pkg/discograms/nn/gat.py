"""
Graph attention over the CaD graph.

All four edge types are flattened into one undirected edge list over a
global node indexing (scenes, then dialogues, then characters, each in
storage order); every node also attends to itself.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from discograms.core.tensor import (
    Tensor, dropout, elu, index_add, leaky_relu, segment_softmax, take, xavier_uniform
)
from discograms.models.graph import EDGE_TYPES, NODE_TYPES, CaDGraph
from discograms.nn.layers import Linear, Module
from discograms.utils.exceptions import ShapeMismatch


@dataclass(frozen=True)
class EdgeIndex:
    """Directed message list: node ``dst[k]`` receives from node ``src[k]``"""
    src: np.ndarray
    dst: np.ndarray
    node_count: int
    offsets: Tuple[int, int, int]


def edge_index(graph: CaDGraph) -> EdgeIndex:
    """
    Flatten a graph into global (src, dst) arrays with both directions and self-loops.

    Args:
        graph: CaD graph

    Returns:
        EdgeIndex
    """
    offsets, start = {}, 0
    for ntype in NODE_TYPES:
        offsets[ntype] = start
        start += len(graph.table(ntype))
    rows = {ntype: graph.table(ntype).row_of() for ntype in NODE_TYPES}

    src: List[int] = list(range(start))
    dst: List[int] = list(range(start))
    for etype, (left, right) in EDGE_TYPES.items():
        for a, b in graph.edges(etype):
            u = offsets[left] + rows[left][a]
            v = offsets[right] + rows[right][b]
            src.extend((u, v))
            dst.extend((v, u))

    return EdgeIndex(np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64), start,
                     tuple(offsets[t] for t in NODE_TYPES))


def node_features(graph: CaDGraph) -> Tensor:
    """[N, d] input features in global node order."""
    return Tensor(np.concatenate([graph.table(t).features for t in NODE_TYPES], axis=0))


class GatLayer(Module):
    """
    One multi-head graph attention layer.

    Per head h: e_ij = LeakyReLU(a_h . [W_h x_i || W_h x_j]) over j in N(i)
    and i itself, weights are the softmax of e over that neighbourhood, and
    the head output is ELU of the weighted sum of W_h x_j. Heads are
    concatenated to ``heads * head_dim`` features.
    """

    def __init__(self, d_in: int, heads: int, head_dim: int, p: float, rng: np.random.Generator,
                 slope: float = 0.2):
        self.d_in = d_in
        self.heads = heads
        self.head_dim = head_dim
        self.proj = Linear(d_in, heads * head_dim, rng, bias=False)
        self.att_self = xavier_uniform((heads, head_dim), rng)
        self.att_neigh = xavier_uniform((heads, head_dim), rng)
        self.slope = slope
        self.p = p
        self.rng = rng

    @property
    def d_out(self) -> int:
        return self.heads * self.head_dim

    def __call__(self, x: Tensor, index: EdgeIndex) -> Tuple[Tensor, Tensor]:
        if x.ndim != 2 or x.shape[1] != self.d_in or x.shape[0] != index.node_count:
            raise ShapeMismatch(f"GAT layer expects [{index.node_count}, {self.d_in}] features, "
                                f"got {list(x.shape)}")
        n = index.node_count
        h = self.proj(x).reshape(n, self.heads, self.head_dim)

        score_self = (h * self.att_self).sum(axis=-1)
        score_neigh = (h * self.att_neigh).sum(axis=-1)
        logits = leaky_relu(take(score_self, index.dst) + take(score_neigh, index.src), self.slope)
        alpha = segment_softmax(logits, index.dst, n)

        weights = dropout(alpha, self.p, self.training, self.rng)
        messages = take(h, index.src) * weights.reshape(len(index.src), self.heads, 1)
        out = index_add(messages, index.dst, n).reshape(n, self.d_out)
        return elu(out), alpha


def gat_forward(layer: GatLayer, graph: CaDGraph, features: Tensor) -> Tuple[Tensor, np.ndarray]:
    """
    Apply one GAT layer to a graph.

    Args:
        layer: GAT layer
        graph: Nonempty CaD graph
        features: [N, d_in] features in global node order

    Returns:
        ([N, heads * head_dim] features, [edges, heads] attention weights)

    Raises:
        ShapeMismatch: If the feature matrix does not fit the layer or graph
    """
    out, alpha = layer(features, edge_index(graph))
    return out, alpha.data


class GraphEncoder(Module):
    """Stacked GAT layers, mean-pooled over all nodes and mapped to the architecture dim."""

    def __init__(self, d_in: int, layers: int, heads: int, head_dim: int, arch_dim: int, p: float,
                 rng: np.random.Generator):
        self.layers = []
        width = d_in
        for _ in range(layers):
            self.layers.append(GatLayer(width, heads, head_dim, p, rng))
            width = heads * head_dim
        self.readout = Linear(width, arch_dim, rng)

    @property
    def node_dim(self) -> int:
        return self.layers[-1].d_out

    def __call__(self, graph: CaDGraph) -> Tuple[Tensor, Tensor, List[np.ndarray]]:
        """
        Returns:
            ([1, A] encoding, [N, node_dim] node embeddings, attention weights per layer)
        """
        index = edge_index(graph)
        x = node_features(graph)
        attentions = []
        for layer in self.layers:
            x, alpha = layer(x, index)
            attentions.append(alpha.data)
        pooled = x.mean(axis=0, keepdims=True)
        return self.readout(pooled), x, attentions


def split_nodes(graph: CaDGraph, embeddings: np.ndarray) -> dict:
    """Split global-order rows back into {ntype: [n_type, k]} arrays."""
    out, start = {}, 0
    for ntype in NODE_TYPES:
        count = len(graph.table(ntype))
        out[ntype] = embeddings[start:start + count]
        start += count
    return out
