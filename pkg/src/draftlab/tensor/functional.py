# src/draftlab/tensor/functional.py
"""
Differentiable neural-network operations built on `Tensor`.

Operations with a closed-form backward (softmax, normalization, the losses)
are fused: they compute their output in one numpy expression and register
the analytic gradient directly, which keeps them stable at extreme inputs.
"""

import numpy as np

from draftlab.shared.exceptions import (
    DegenerateInputError,
    DimensionError,
    ParameterError,
)
from draftlab.tensor.tensor import Tensor, clamp_min, getitem

MASKED = -1e9


def _require_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes differ, {a.shape} vs {b.shape}")


# --- Activations and normalization ---


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor._from_op(out, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(g: np.ndarray):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return Tensor._from_op(out, (x,), backward, "log_softmax")


def silu(x: Tensor) -> Tensor:
    sig = 1.0 / (1.0 + np.exp(-x.data))
    out = x.data * sig

    def backward(g: np.ndarray):
        return (g * (sig + out * (1.0 - sig)),)

    return Tensor._from_op(out, (x,), backward, "silu")


def softplus(x: Tensor) -> Tensor:
    out = np.logaddexp(0.0, x.data)

    def backward(g: np.ndarray):
        return (g / (1.0 + np.exp(-x.data)),)

    return Tensor._from_op(out, (x,), backward, "softplus")


def rms_norm(x: Tensor, gain: Tensor, eps: float = 1e-6) -> Tensor:
    """x / sqrt(mean(x²) + eps) * gain over the last axis."""
    inv = 1.0 / np.sqrt((x.data * x.data).mean(axis=-1, keepdims=True) + eps)
    normed = x.data * inv

    def backward(g: np.ndarray):
        d_normed = g * gain.data
        d_x = inv * (
            d_normed - normed * (d_normed * normed).mean(axis=-1, keepdims=True)
        )
        d_gain = (g * normed).reshape(-1, gain.shape[-1]).sum(axis=0)
        return d_x, d_gain.reshape(gain.shape)

    return Tensor._from_op(normed * gain.data, (x, gain), backward, "rms_norm")


def l2_normalize(x: Tensor, axis: int = -1) -> Tensor:
    norm = np.sqrt((x.data * x.data).sum(axis=axis, keepdims=True))
    if (norm == 0.0).any():
        raise DegenerateInputError("cannot normalize a zero-norm vector")
    out = x.data / norm

    def backward(g: np.ndarray):
        return ((g - out * (g * out).sum(axis=axis, keepdims=True)) / norm,)

    return Tensor._from_op(out, (x,), backward, "l2_normalize")


def masked_logsumexp(x: Tensor, mask: np.ndarray, axis: int = -1) -> Tensor:
    """log Σ exp(x) over the entries of `axis` where `mask` is True."""
    mask = np.broadcast_to(mask, x.shape)
    if not mask.any(axis=axis).all():
        raise DegenerateInputError("masked_logsumexp over an empty selection")
    filled = np.where(mask, x.data, -np.inf)
    peak = filled.max(axis=axis, keepdims=True)
    weights = np.where(mask, np.exp(filled - peak), 0.0)
    total = weights.sum(axis=axis, keepdims=True)
    out = (np.log(total) + peak).squeeze(axis)

    def backward(g: np.ndarray):
        return (np.expand_dims(g, axis) * weights / total,)

    return Tensor._from_op(out, (x,), backward, "masked_logsumexp")


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    return getitem(weight, np.asarray(ids, dtype=np.int64))


# --- Losses ---


def smooth_l1(pred: Tensor, target: Tensor, beta: float = 1.0) -> Tensor:
    """Mean smooth-L1 (Huber with transition at `beta`) over all elements."""
    if beta <= 0:
        raise ParameterError(f"smooth_l1 needs beta > 0, got {beta}")
    _require_same_shape(pred, target, "smooth_l1")
    diff = pred.data - target.data
    absdiff = np.abs(diff)
    quadratic = absdiff < beta
    elementwise = np.where(quadratic, 0.5 * diff * diff / beta, absdiff - 0.5 * beta)
    scale = 1.0 / diff.size

    def backward(g: np.ndarray):
        d = g * scale * np.where(quadratic, diff / beta, np.sign(diff))
        return d, -d

    return Tensor._from_op(
        np.asarray(elementwise.sum() * scale), (pred, target), backward, "smooth_l1"
    )


def cross_entropy(log_probs: Tensor, target_probs: Tensor) -> Tensor:
    """
    Mean over rows of -Σ target·log_probs along the last axis. Targets may
    be soft distributions; the loss is then bounded below by their entropy.
    """
    _require_same_shape(log_probs, target_probs, "cross_entropy")
    rows = log_probs.data.size // log_probs.shape[-1]
    return (log_probs * target_probs).sum() * (-1.0 / rows)


def cosine_similarity(a: Tensor, b: Tensor, axis: int = -1) -> Tensor:
    _require_same_shape(a, b, "cosine_similarity")
    return (l2_normalize(a, axis) * l2_normalize(b, axis)).sum(axis=axis)


def log_clamped(p: Tensor, floor: float = 1e-12) -> Tensor:
    return clamp_min(p, floor).log()
