# src/draftlab/tensor/gradcheck.py
"""Central finite-difference checks for the autodiff substrate."""

from collections.abc import Callable, Sequence

import numpy as np

from draftlab.tensor.tensor import Tensor


def numerical_gradient(
    loss_fn: Callable[[], Tensor], param: Tensor, eps: float = 1e-5
) -> np.ndarray:
    """Central differences of `loss_fn()` w.r.t. every entry of `param`."""
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        upper = loss_fn().item()
        flat[i] = original - eps
        lower = loss_fn().item()
        flat[i] = original
        grad_flat[i] = (upper - lower) / (2 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def gradient_errors(
    loss_fn: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5
) -> list[float]:
    """
    Relative error between backward() and central differences, one value per
    parameter. Existing `.grad` arrays are cleared first.
    """
    for p in params:
        p.zero_grad()
    loss_fn().backward()
    errors = []
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        errors.append(relative_error(analytic, numerical_gradient(loss_fn, p, eps)))
    return errors
