"""
Adam optimizer over Parameters.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from discograms.core.tensor import Parameter
from discograms.utils.exceptions import NonFinite, ShapeMismatch

logger = logging.getLogger(__name__)


class Adam:
    """
    Adam with bias-corrected moments.

    Attributes:
        step_count: Number of updates applied so far
        m, v: First and second moment estimates, one array per parameter
    """

    def __init__(self, params: Sequence[Parameter], lr: float = 1e-5, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params: List[Parameter] = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        """
        Apply one update from the gradients currently stored on the parameters.

        Raises:
            NonFinite: If a gradient or an updated parameter is not finite
        """
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        adam_step(self.params, grads, self.lr, self.beta1, self.beta2, self.eps, state=self)

    def load_state(self, step: int, m: Sequence[np.ndarray], v: Sequence[np.ndarray]) -> None:
        if len(m) != len(self.params) or len(v) != len(self.params):
            raise ShapeMismatch("Optimizer state does not match the parameter list")
        self.step_count = int(step)
        self.m = [np.array(a, dtype=p.data.dtype).reshape(p.shape) for a, p in zip(m, self.params)]
        self.v = [np.array(a, dtype=p.data.dtype).reshape(p.shape) for a, p in zip(v, self.params)]


def adam_step(params: Sequence[Parameter], grads: Sequence[np.ndarray], lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
              state: Optional[Adam] = None) -> Sequence[Parameter]:
    """
    Update parameters in place with one Adam step.

    Args:
        params: Parameters to update
        grads: One gradient per parameter
        lr: Learning rate
        beta1, beta2: Moment decay rates
        eps: Denominator offset
        state: Moment estimates and step count; a fresh state is used when omitted

    Returns:
        The updated parameters

    Raises:
        NonFinite: If any gradient or updated value is NaN or Inf
    """
    if state is None:
        state = Adam(params, lr, beta1, beta2, eps)
    for p, g in zip(params, grads):
        if not np.all(np.isfinite(g)):
            raise NonFinite(f"Gradient of {getattr(p, 'name', '') or 'parameter'} is not finite",
                            {'parameter': getattr(p, 'name', ''), 'step': state.step_count})

    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t
    for i, (p, g) in enumerate(zip(params, grads)):
        g = np.asarray(g, dtype=p.data.dtype)
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        update = (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype)
        p.data = p.data - update
        if not np.all(np.isfinite(p.data)):
            raise NonFinite(f"Parameter {getattr(p, 'name', '')} became non-finite",
                            {'parameter': getattr(p, 'name', ''), 'step': t})
    return params
