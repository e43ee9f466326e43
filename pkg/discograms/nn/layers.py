"""
Building blocks for the LGAT stack on top of the tensor engine.
"""

import math
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from discograms.core.tensor import (
    Parameter, Tensor, dropout, layer_norm, ones, relu, softmax, take, xavier_uniform, zeros
)
from discograms.utils.exceptions import ShapeMismatch


class Module:
    """
    Base class for layers: parameter discovery, train/eval mode and dtype casts.

    Parameters and sub-modules are found by walking instance attributes,
    including lists of modules, in attribute definition order.
    """

    training: bool = True

    def named_parameters(self, prefix: str = '') -> Iterator[Tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Parameter):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.")
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator['Module']:
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, list):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def train(self, mode: bool = True) -> 'Module':
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> 'Module':
        return self.train(False)

    def astype(self, dtype) -> 'Module':
        """Cast every parameter in place (float64 for gradient checks)."""
        for _, p in self.named_parameters():
            p.data = p.data.astype(dtype)
            p.grad = None
        return self

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state(self) -> Dict[str, np.ndarray]:
        return {name: p.data for name, p in self.named_parameters()}

    def load_state(self, arrays: Dict[str, np.ndarray]) -> None:
        """
        Copy arrays into parameters by name.

        Raises:
            ShapeMismatch: If names or shapes differ
        """
        named = dict(self.named_parameters())
        missing = sorted(set(named) - set(arrays))
        unexpected = sorted(set(arrays) - set(named))
        if missing or unexpected:
            raise ShapeMismatch("Checkpoint parameters do not match the model",
                                {'missing': missing, 'unexpected': unexpected})
        for name, p in named.items():
            if tuple(arrays[name].shape) != p.shape:
                raise ShapeMismatch(f"Parameter {name} has shape {list(arrays[name].shape)}, "
                                    f"model expects {list(p.shape)}", {'parameter': name})
            p.data = np.array(arrays[name], dtype=p.data.dtype)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = xavier_uniform((d_in, d_out), rng)
        self.bias = zeros((d_out,)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = x @ self.weight
        return out + self.bias if self.bias is not None else out


class Embedding(Module):
    def __init__(self, count: int, dim: int, rng: np.random.Generator):
        self.weight = xavier_uniform((count, dim), rng)

    def __call__(self, ids) -> Tensor:
        return take(self.weight, np.asarray(ids, dtype=np.int64))


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gamma = ones((dim,))
        self.beta = zeros((dim,))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta, self.eps)


class FeedForward(Module):
    """Position-wise Linear, ReLU, dropout, Linear."""

    def __init__(self, dim: int, hidden: int, p: float, rng: np.random.Generator):
        self.inner = Linear(dim, hidden, rng)
        self.outer = Linear(hidden, dim, rng)
        self.p = p
        self.rng = rng

    def __call__(self, x: Tensor) -> Tensor:
        h = dropout(relu(self.inner(x)), self.p, self.training, self.rng)
        return self.outer(h)


class MultiHeadAttention(Module):
    """
    Scaled dot-product attention with ``heads`` heads over 2-D [length, dim] inputs.

    ``last_weights`` keeps the [heads, n, m] attention weights of the most
    recent call for inspection.
    """

    def __init__(self, dim: int, heads: int, p: float, rng: np.random.Generator):
        if dim % heads:
            raise ShapeMismatch(f"Attention dim {dim} is not divisible by {heads} heads")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.query = Linear(dim, dim, rng)
        self.key = Linear(dim, dim, rng)
        self.value = Linear(dim, dim, rng)
        self.output = Linear(dim, dim, rng)
        self.p = p
        self.rng = rng
        self.last_weights: Optional[np.ndarray] = None

    def _split(self, x: Tensor) -> Tensor:
        return x.reshape(x.shape[0], self.heads, self.head_dim).transpose(1, 0, 2)

    def __call__(self, query: Tensor, key: Tensor, value: Tensor, mask: Optional[Tensor] = None) -> Tensor:
        if query.ndim != 2 or key.ndim != 2 or query.shape[1] != self.dim or key.shape[1] != self.dim:
            raise ShapeMismatch(f"Attention expects [n, {self.dim}] inputs, got "
                                f"{list(query.shape)} and {list(key.shape)}")
        q = self._split(self.query(query))
        k = self._split(self.key(key))
        v = self._split(self.value(value))

        scores = (q @ k.transpose(0, 2, 1)) * (1.0 / math.sqrt(self.head_dim))
        if mask is not None:
            scores = scores + mask
        weights = softmax(scores, axis=-1)
        self.last_weights = weights.data
        weights = dropout(weights, self.p, self.training, self.rng)

        context = (weights @ v).transpose(1, 0, 2).reshape(query.shape[0], self.dim)
        return self.output(context)


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    """[length, dim] sine/cosine position table."""
    position = np.arange(length, dtype=np.float64)[:, None]
    rate = np.exp(np.arange(0, dim, 2, dtype=np.float64) * (-math.log(10000.0) / dim))
    table = np.zeros((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(position * rate)
    table[:, 1::2] = np.cos(position * rate[: dim // 2])
    return table.astype(np.float32)
