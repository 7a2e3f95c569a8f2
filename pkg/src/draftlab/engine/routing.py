# src/draftlab/engine/routing.py
from typing import NamedTuple

import numpy as np

from draftlab.models.router import (
    GroupedDistribution,
    RouterHead,
    grouped_head_prob,
    top_groups,
)


class DepthDistributions(NamedTuple):
    """Draft laws of the nodes at one depth, and the LM-head groups behind them."""

    probs: np.ndarray
    active_groups: tuple[int, ...] | None


def routed_logits(
    hidden: np.ndarray,
    router: RouterHead,
    lm_head: np.ndarray,
    top_n: int,
    temperature: float = 1.0,
) -> tuple[tuple[int, ...], GroupedDistribution]:
    """Activates the router's `top_n` groups and factorizes the draft law over them."""
    p_router = router.router_forward(hidden)
    active = top_groups(p_router, top_n)
    return active, grouped_head_prob(hidden, lm_head, p_router, active, temperature)


def depth_distributions(
    hiddens: np.ndarray,
    lm_head: np.ndarray,
    temperature: float,
    router: RouterHead | None = None,
    top_n: int = 1,
) -> DepthDistributions:
    """
    Draft laws [m, V] for the m nodes of one depth. With a router, every
    node uses the union of the nodes' top-n groups (those LM-head columns
    are computed anyway) and its law is renormalized over that support.
    """
    scale = temperature if temperature > 0 else 1.0
    if router is None:
        logits = (hiddens @ lm_head) / scale
        shifted = np.exp(logits - logits.max(axis=-1, keepdims=True))
        return DepthDistributions(shifted / shifted.sum(axis=-1, keepdims=True), None)
    p_router = router.router_forward(hiddens)
    union = sorted({g for row in p_router for g in top_groups(row, top_n)})
    probs = np.stack(
        [
            grouped_head_prob(h, lm_head, p, union, scale).renormalized()
            for h, p in zip(hiddens, p_router, strict=True)
        ]
    )
    return DepthDistributions(probs, tuple(union))
