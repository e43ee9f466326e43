"""
Dense tensors with reverse-mode automatic differentiation.

Every differentiable operation is a ``Function`` subclass with a ``forward``
over numpy arrays and a ``backward`` that maps the output gradient to one
gradient per input. ``Function.apply`` records the graph; ``Tensor.backward``
walks it in reverse topological order and accumulates gradients.
"""

import contextlib
import threading
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from discograms.utils.exceptions import NonFinite, ShapeMismatch

ArrayLike = Union[np.ndarray, float, int, Sequence]
DEFAULT_DTYPE = np.float32
MASK_VALUE = -1e9

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, 'enabled', True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Run forward passes without recording the graph (per thread)."""
    previous = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Tensor:
    """
    A numpy array plus the bookkeeping for gradients.

    Attributes:
        data: Row-major array
        grad: Accumulated gradient, same shape as data, or None
        requires_grad: Whether gradients flow into this tensor
    """

    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False, ctx: 'Function' = None,
                 dtype=None):
        if isinstance(data, np.ndarray) and dtype is None:
            self.data = data
        else:
            self.data = np.asarray(data, dtype=dtype or DEFAULT_DTYPE)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._ctx = ctx

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> 'Tensor':
        return Tensor(self.data)

    @staticmethod
    def wrap(x) -> 'Tensor':
        return x if isinstance(x, Tensor) else Tensor(x)

    # arithmetic
    def __add__(self, other): return Add.apply(self, Tensor.wrap(other))
    def __radd__(self, other): return Add.apply(Tensor.wrap(other), self)
    def __sub__(self, other): return Sub.apply(self, Tensor.wrap(other))
    def __rsub__(self, other): return Sub.apply(Tensor.wrap(other), self)
    def __mul__(self, other): return Mul.apply(self, Tensor.wrap(other))
    def __rmul__(self, other): return Mul.apply(Tensor.wrap(other), self)
    def __truediv__(self, other): return Div.apply(self, Tensor.wrap(other))
    def __neg__(self): return Neg.apply(self)
    def __matmul__(self, other): return MatMul.apply(self, Tensor.wrap(other))

    def sum(self, axis=None, keepdims: bool = False) -> 'Tensor':
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> 'Tensor':
        return Mean.apply(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> 'Tensor':
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Reshape.apply(self, shape=shape)

    def transpose(self, *axes) -> 'Tensor':
        return Transpose.apply(self, axes=axes or None)

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """
        Backpropagate from this tensor.

        Args:
            grad: Seed gradient; defaults to ones for a single-element tensor

        Raises:
            ShapeMismatch: If no seed is given for a non-scalar tensor
        """
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch(f"backward() needs a seed gradient for shape {self.shape}")
            grad = np.ones_like(self.data)

        order = _toposort(self)
        self.grad = grad if self.grad is None else self.grad + grad
        for node in reversed(order):
            ctx = node._ctx
            if ctx is None or node.grad is None:
                continue
            grads = ctx.backward(node.grad)
            if not isinstance(grads, tuple):
                grads = (grads,)
            for parent, g in zip(ctx.parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                g = np.asarray(g, dtype=parent.data.dtype)
                parent.grad = g if parent.grad is None else parent.grad + g
            # intermediate gradients are not kept
            if node is not self:
                node.grad = None


def _toposort(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node._ctx is not None:
            for parent in node._ctx.parents:
                if id(parent) not in visited and parent.requires_grad:
                    stack.append((parent, False))
    return order


class Parameter(Tensor):
    """A named trainable tensor."""

    def __init__(self, data: ArrayLike, name: str = ''):
        super().__init__(np.array(data, dtype=DEFAULT_DTYPE), requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


def xavier_uniform(shape: Tuple[int, ...], rng: np.random.Generator, name: str = '') -> Parameter:
    fan_in, fan_out = shape[-2] if len(shape) > 1 else shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Parameter(rng.uniform(-limit, limit, size=shape), name)


def zeros(shape: Tuple[int, ...], name: str = '') -> Parameter:
    return Parameter(np.zeros(shape), name)


def ones(shape: Tuple[int, ...], name: str = '') -> Parameter:
    return Parameter(np.ones(shape), name)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Function:
    """One recorded operation: parents plus whatever forward cached for backward."""

    def __init__(self, *parents: Tensor):
        self.parents = parents

    @classmethod
    def apply(cls, *tensors: Tensor, **kwargs) -> Tensor:
        ctx = cls(*tensors)
        try:
            out = ctx.forward(*[t.data for t in tensors], **kwargs)
        except ValueError as e:
            shapes = [list(t.shape) for t in tensors]
            raise ShapeMismatch(f"{cls.__name__} got incompatible shapes {shapes}: {e}",
                                {'op': cls.__name__, 'shapes': shapes}) from e
        requires_grad = grad_enabled() and any(t.requires_grad for t in tensors)
        return Tensor(out, requires_grad=requires_grad, ctx=ctx if requires_grad else None)

    def forward(self, *args, **kwargs) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray):
        raise NotImplementedError


class Add(Function):
    def forward(self, x, y):
        self.shapes = x.shape, y.shape
        return x + y

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(grad, self.shapes[1])


class Sub(Function):
    def forward(self, x, y):
        self.shapes = x.shape, y.shape
        return x - y

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return x * y

    def backward(self, grad):
        return _unbroadcast(grad * self.y, self.x.shape), _unbroadcast(grad * self.x, self.y.shape)


class Div(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return x / y

    def backward(self, grad):
        gx = grad / self.y
        gy = -grad * self.x / (self.y * self.y)
        return _unbroadcast(gx, self.x.shape), _unbroadcast(gy, self.y.shape)


class Neg(Function):
    def forward(self, x):
        return -x

    def backward(self, grad):
        return -grad


class MatMul(Function):
    def forward(self, x, y):
        if x.ndim < 2 or y.ndim < 2:
            raise ValueError("matmul needs at least 2-D operands")
        self.x, self.y = x, y
        return x @ y

    def backward(self, grad):
        gx = grad @ np.swapaxes(self.y, -1, -2)
        gy = np.swapaxes(self.x, -1, -2) @ grad
        return _unbroadcast(gx, self.x.shape), _unbroadcast(gy, self.y.shape)


class Exp(Function):
    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return grad * self.out


class Log(Function):
    def forward(self, x):
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return grad / self.x


class Sum(Function):
    def forward(self, x, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        return np.sum(x, axis=axis, keepdims=keepdims)

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return np.broadcast_to(grad, self.shape).copy()


class Mean(Function):
    def forward(self, x, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        out = np.mean(x, axis=axis, keepdims=keepdims)
        self.count = x.size // max(np.size(out), 1)
        return out

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return np.broadcast_to(grad / self.count, self.shape).copy()


class Reshape(Function):
    def forward(self, x, shape):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return grad.reshape(self.shape)


class Transpose(Function):
    def forward(self, x, axes=None):
        self.axes = tuple(axes) if axes else tuple(reversed(range(x.ndim)))
        return np.transpose(x, self.axes)

    def backward(self, grad):
        return np.transpose(grad, np.argsort(self.axes))


class Concat(Function):
    def forward(self, *xs, axis=0):
        self.axis = axis
        self.splits = np.cumsum([x.shape[axis] for x in xs])[:-1]
        return np.concatenate(xs, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


class Take(Function):
    """Gather rows along axis 0; repeated indices accumulate in backward."""

    def forward(self, x, index):
        self.shape, self.index = x.shape, index
        return x[index]

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=grad.dtype)
        np.add.at(out, self.index, grad)
        return out


class IndexAdd(Function):
    """Scatter-sum rows of x into ``size`` output rows at ``index``."""

    def forward(self, x, index, size):
        self.index = index
        out = np.zeros((size,) + x.shape[1:], dtype=x.dtype)
        np.add.at(out, index, x)
        return out

    def backward(self, grad):
        return grad[self.index]


class Softmax(Function):
    def forward(self, x, axis=-1):
        self.axis = axis
        shifted = x - np.max(x, axis=axis, keepdims=True)
        e = np.exp(shifted)
        self.out = e / np.sum(e, axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return y * (grad - np.sum(grad * y, axis=self.axis, keepdims=True))


class Relu(Function):
    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0).astype(x.dtype)

    def backward(self, grad):
        return grad * self.mask


class LeakyRelu(Function):
    def forward(self, x, slope=0.2):
        self.scale = np.where(x > 0, 1.0, slope).astype(x.dtype)
        return x * self.scale

    def backward(self, grad):
        return grad * self.scale


class Elu(Function):
    def forward(self, x, alpha=1.0):
        self.x, self.alpha = x, alpha
        self.out = np.where(x > 0, x, alpha * np.expm1(np.minimum(x, 0))).astype(x.dtype)
        return self.out

    def backward(self, grad):
        return grad * np.where(self.x > 0, 1.0, self.out + self.alpha)


class Dropout(Function):
    def forward(self, x, p=0.0, rng=None):
        keep = 1.0 - p
        self.mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self.mask

    def backward(self, grad):
        return grad * self.mask


class LayerNorm(Function):
    """Normalization over the last axis with learned scale and shift."""

    def forward(self, x, gamma, beta, eps=1e-5):
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        self.rstd = 1.0 / np.sqrt(var + eps)
        self.xhat = (x - mu) * self.rstd
        self.gamma = gamma
        self.gamma_shape, self.beta_shape = gamma.shape, beta.shape
        return self.xhat * gamma + beta

    def backward(self, grad):
        n = self.xhat.shape[-1]
        dxhat = grad * self.gamma
        dx = self.rstd / n * (n * dxhat - dxhat.sum(axis=-1, keepdims=True)
                              - self.xhat * (dxhat * self.xhat).sum(axis=-1, keepdims=True))
        dgamma = _unbroadcast(grad * self.xhat, self.gamma_shape)
        dbeta = _unbroadcast(grad, self.beta_shape)
        return dx, dgamma, dbeta


class CrossEntropy(Function):
    """Mean negative log-likelihood of integer targets under softmax(logits)."""

    def forward(self, logits, targets):
        shifted = logits - logits.max(axis=-1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
        log_probs = shifted - log_z
        self.probs = np.exp(log_probs)
        self.targets = targets
        rows = np.arange(len(targets))
        return np.asarray(-log_probs[rows, targets].mean(), dtype=logits.dtype)

    def backward(self, grad):
        n = len(self.targets)
        g = self.probs.copy()
        g[np.arange(n), self.targets] -= 1.0
        return g * (grad / n)


# functional surface

def matmul(x: Tensor, y: Tensor) -> Tensor:
    return MatMul.apply(x, y)


def add(x: Tensor, y: Tensor) -> Tensor:
    return Add.apply(x, Tensor.wrap(y))


def exp(x: Tensor) -> Tensor:
    return Exp.apply(x)


def log(x: Tensor) -> Tensor:
    return Log.apply(x)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def take(x: Tensor, index: np.ndarray) -> Tensor:
    return Take.apply(x, index=np.asarray(index, dtype=np.int64))


def index_add(x: Tensor, index: np.ndarray, size: int) -> Tensor:
    return IndexAdd.apply(x, index=np.asarray(index, dtype=np.int64), size=int(size))


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return Softmax.apply(x, axis=axis)


def segment_softmax(scores: Tensor, segments: np.ndarray, size: int) -> Tensor:
    """
    Softmax of ``scores`` within groups of rows sharing a segment id.

    Args:
        scores: [m, ...] scores, one row per member
        segments: [m] segment id of each row
        size: Number of segments

    Returns:
        [m, ...] weights summing to 1 within every segment
    """
    segments = np.asarray(segments, dtype=np.int64)
    peak = np.full((size,) + scores.shape[1:], -np.inf, dtype=scores.dtype)
    np.maximum.at(peak, segments, scores.data)
    e = exp(scores - Tensor(peak[segments]))
    total = index_add(e, segments, size)
    return e / take(total, segments)


def relu(x: Tensor) -> Tensor:
    return Relu.apply(x)


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    return LeakyRelu.apply(x, slope=slope)


def elu(x: Tensor, alpha: float = 1.0) -> Tensor:
    return Elu.apply(x, alpha=alpha)


def dropout(x: Tensor, p: float, training: bool, rng: Optional[np.random.Generator] = None) -> Tensor:
    """
    Inverted dropout; identity when not training or when p is 0.

    Raises:
        ValueError: If p is outside [0, 1)
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"Dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    return Dropout.apply(x, p=p, rng=rng if rng is not None else np.random.default_rng())


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    return LayerNorm.apply(x, gamma, beta, eps=eps)


def cross_entropy(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """
    Mean cross-entropy of [n, V] logits against n integer targets.

    Raises:
        ShapeMismatch: If logits are not [len(targets), V]
        NonFinite: If logits contain NaN or Inf
    """
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or logits.shape[0] != len(targets):
        raise ShapeMismatch(f"cross_entropy needs [{len(targets)}, V] logits, got {list(logits.shape)}")
    if targets.size and (targets.min() < 0 or targets.max() >= logits.shape[1]):
        raise ShapeMismatch(f"Target ids must lie in [0, {logits.shape[1]})")
    if not np.all(np.isfinite(logits.data)):
        raise NonFinite("Logits contain non-finite values")
    return CrossEntropy.apply(logits, targets=targets)


def causal_mask(n: int, dtype=DEFAULT_DTYPE) -> Tensor:
    """Additive [n, n] mask: 0 on and below the diagonal, a large negative value above."""
    return Tensor(np.triu(np.full((n, n), MASK_VALUE, dtype=dtype), k=1))
