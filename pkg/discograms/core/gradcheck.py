"""
Finite-difference verification of autodiff gradients.
"""

import logging
from typing import Callable

import numpy as np

from discograms.core.tensor import Tensor
from discograms.utils.exceptions import NonFinite, ShapeMismatch

logger = logging.getLogger(__name__)

TINY = 1e-12


def _scalar(out: Tensor) -> float:
    if out.data.size != 1:
        raise ShapeMismatch(f"grad_check needs a scalar-valued function, got shape {list(out.shape)}")
    value = float(out.data.reshape(-1)[0])
    if not np.isfinite(value):
        raise NonFinite("Function value is not finite", {'value': str(value)})
    return value


def autodiff_gradient(f: Callable[[Tensor], Tensor], x: Tensor) -> np.ndarray:
    """
    Gradient of scalar ``f`` at ``x`` by backpropagation, in float64.

    Returns:
        Array shaped like x; zeros when f does not depend on x
    """
    leaf = Tensor(np.array(x.data, dtype=np.float64), requires_grad=True)
    out = f(leaf)
    _scalar(out)
    if out.requires_grad:
        out.backward()
    return leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)


def numeric_gradient(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x``, in float64."""
    point = np.array(x.data, dtype=np.float64)
    grad = np.zeros_like(point)
    for idx in np.ndindex(point.shape):
        original = point[idx]
        point[idx] = original + eps
        upper = _scalar(f(Tensor(point.copy())))
        point[idx] = original - eps
        lower = _scalar(f(Tensor(point.copy())))
        point[idx] = original
        grad[idx] = (upper - lower) / (2 * eps)
    return grad


def discrepancy(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest absolute difference relative to the largest gradient magnitude."""
    scale = max(float(np.max(np.abs(analytic), initial=0.0)),
                float(np.max(np.abs(numeric), initial=0.0)), TINY)
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-4, tol: float = 1e-4) -> bool:
    """
    Compare backpropagated and central-difference gradients.

    ``f`` is evaluated on float64 copies of ``x``; models used inside ``f``
    should be cast to float64 and have dropout disabled.

    Args:
        f: Scalar-valued tensor function
        x: Point to check at
        eps: Finite-difference step
        tol: Largest acceptable relative discrepancy

    Returns:
        True iff the discrepancy is within tol

    Raises:
        NonFinite: If f is not finite at a perturbed point
    """
    analytic = autodiff_gradient(f, x)
    numeric = numeric_gradient(f, x, eps)
    if not np.all(np.isfinite(analytic)):
        raise NonFinite("Autodiff gradient contains non-finite values")
    gap = discrepancy(analytic, numeric)
    logger.debug(f"grad_check over {x.data.size} entries: discrepancy {gap:.3e} (tol {tol:.1e})")
    return gap <= tol
