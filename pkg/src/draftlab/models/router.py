# src/draftlab/models/router.py
"""
The LM-head router: a residual two-layer network scoring N contiguous,
equally sized vocabulary groups, and the grouped factorization of the
draft distribution it enables, p(x) = p_router(n) * p_group(x | n).
"""

from collections.abc import Iterable
from typing import NamedTuple

import numpy as np

from draftlab.models.config import ModelConfig
from draftlab.models.layers import Module, init_matrix
from draftlab.shared.exceptions import ParameterError
from draftlab.tensor import Tensor, no_grad
from draftlab.tensor import functional as F
from draftlab.tensor.tensor import clamp_min


def _activate(x: Tensor, name: str) -> Tensor:
    if name == "silu":
        return F.silu(x)
    if name == "relu":
        return clamp_min(x, 0.0)
    return x


class RouterHead(Module):
    """Computes Softmax(W2 (act(W1 h) + h)) over the N vocabulary groups."""

    def __init__(self, config: ModelConfig, seed: int | None = None):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.init_seed + 2 if seed is None else seed)
        d, groups = config.hidden_size, config.head_groups
        self.w1 = self.register("w1", init_matrix(rng, d, d))
        self.w2 = self.register("w2", init_matrix(rng, groups, d))

    def logits(self, hidden: Tensor) -> Tensor:
        z = _activate(hidden @ self.w1.transpose(1, 0), self.config.router_activation)
        return (z + hidden) @ self.w2.transpose(1, 0)

    def log_probs(self, hidden: Tensor) -> Tensor:
        return F.log_softmax(self.logits(hidden), axis=-1)

    def router_forward(self, hidden: np.ndarray) -> np.ndarray:
        """Group law [N] of one hidden state [d], or [M, N] of a batch [M, d]."""
        hidden = np.asarray(hidden)
        with no_grad():
            probs = F.softmax(self.logits(Tensor(np.atleast_2d(hidden))), axis=-1).data
        return probs[0] if hidden.ndim == 1 else probs


def group_slice(group: int, group_size: int) -> slice:
    return slice(group * group_size, (group + 1) * group_size)


def group_sums(probs: np.ndarray, groups: int) -> np.ndarray:
    """Sums a distribution [..., V] over contiguous groups -> [..., N]."""
    probs = np.asarray(probs)
    return probs.reshape(*probs.shape[:-1], groups, -1).sum(axis=-1)


def top_groups(p_router: np.ndarray, top_n: int) -> tuple[int, ...]:
    """The `top_n` most probable groups; ties go to the lowest group id."""
    if not 1 <= top_n <= len(p_router):
        raise ParameterError(f"top_n must lie in [1, {len(p_router)}], got {top_n}")
    order = np.argsort(-np.asarray(p_router), kind="stable")
    return tuple(sorted(int(g) for g in order[:top_n]))


class GroupedDistribution(NamedTuple):
    """
    A factorized draft distribution restricted to the active groups.
    `probs` is not renormalized: its total equals `active_mass`.
    """

    probs: np.ndarray
    active_groups: tuple[int, ...]
    active_mass: float

    def renormalized(self) -> np.ndarray:
        return self.probs / self.probs.sum()


def grouped_head_prob(
    hidden: np.ndarray,
    lm_head: np.ndarray,
    p_router: np.ndarray,
    active_groups: Iterable[int],
    temperature: float = 1.0,
) -> GroupedDistribution:
    """
    Factorized distribution over the vocabulary using only the LM-head
    columns of `active_groups`; `temperature` divides the within-group
    logits.
    """
    active = tuple(sorted({int(g) for g in active_groups}))
    groups = len(p_router)
    if not active:
        raise ParameterError("grouped_head_prob needs at least one active group")
    if active[0] < 0 or active[-1] >= groups:
        raise ParameterError(f"group ids must lie in [0, {groups})")
    if temperature <= 0:
        raise ParameterError("grouped_head_prob needs a positive temperature")
    vocab = lm_head.shape[1]
    group_size = vocab // groups
    probs = np.zeros(vocab)
    for group in active:
        cols = group_slice(group, group_size)
        logits = (np.asarray(hidden) @ lm_head[:, cols]) / temperature
        shifted = np.exp(logits - logits.max())
        probs[cols] = p_router[group] * shifted / shifted.sum()
    return GroupedDistribution(probs, active, float(sum(p_router[g] for g in active)))
