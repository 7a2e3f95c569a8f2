# src/draftlab/training/losses.py
"""
Training objectives: the cross-step representation alignment loss, the
combined draft loss and the router objective.
"""

from collections.abc import Sequence

import numpy as np

from draftlab.models.router import group_sums
from draftlab.shared.exceptions import DistributionError, ParameterError
from draftlab.shared.models import LossBreakdown
from draftlab.tensor import Tensor, stack
from draftlab.tensor import functional as F
from draftlab.training.batches import StepFeatures, TrainBatch
from draftlab.training.config import TrainConfig

# --- Cross-step representation alignment ---


def csra_loss(
    step_features: Sequence[Tensor],
    target_features: Tensor,
    temperature: float = 0.07,
    target_positive: bool = True,
) -> Tensor:
    """
    InfoNCE over the draft's step outputs, averaged over every (query,
    positive) pair.

    Queries are step features [B, S, d]. For the query at (b, s) of one
    step, positives are the features at (b, s) of every other step and,
    with `target_positive`, the target feature at (b, s). The denominator
    of a pair holds its positive plus every feature (any step or the
    target) at a different (b, s). Similarity is cosine over `temperature`.
    """
    steps = len(step_features)
    if steps < 2:
        raise ParameterError("csra_loss needs features from at least 2 steps")
    if temperature <= 0:
        raise ParameterError("csra_loss needs a positive temperature")
    views = stack([*step_features, target_features], axis=0)
    view_count = steps + 1
    places = int(np.prod(views.shape[1:-1]))
    normed = F.l2_normalize(views.reshape(view_count * places, -1), axis=-1)
    queries = normed[: steps * places]
    logits = (queries @ normed.transpose(1, 0)) * (1.0 / temperature)

    query_place = np.arange(steps * places) % places
    candidate_place = np.arange(view_count * places) % places
    negatives = query_place[:, None] != candidate_place[None, :]
    negative_lse = F.masked_logsumexp(logits, negatives, axis=-1)

    positive_views = view_count if target_positive else steps
    query_rows, positive_cols = [], []
    for view in range(steps):
        for other in range(positive_views):
            if other == view:
                continue
            query_rows.append(view * places + np.arange(places))
            positive_cols.append(other * places + np.arange(places))
    rows = np.concatenate(query_rows)
    cols = np.concatenate(positive_cols)
    positive_logits = logits[rows, cols]
    return F.softplus(negative_lse[rows] - positive_logits).mean()


# --- Draft loss ---


def draft_loss(
    batch: TrainBatch, rollout: StepFeatures, lm_head: Tensor, config: TrainConfig
) -> tuple[Tensor, LossBreakdown]:
    """
    w_reg * Σ_steps smooth_l1 + w_cls * Σ_steps cross-entropy against the
    target distributions + w_csra * csra_loss. Draft position i predicts
    sequence position i + 1.
    """
    targets = Tensor(batch.target_features[:, 1:])
    target_probs = Tensor(batch.target_probs[:, 1:])
    regression = Tensor(0.0)
    classification = Tensor(0.0)
    for features in rollout.features:
        regression = regression + F.smooth_l1(features, targets, config.smooth_l1_beta)
        log_probs = F.log_softmax(features @ lm_head, axis=-1)
        classification = classification + F.cross_entropy(log_probs, target_probs)
    alignment = Tensor(0.0)
    if config.w_csra > 0:
        alignment = csra_loss(
            rollout.features,
            targets,
            config.csra_temperature,
            config.csra_target_positive,
        )
    total = (
        regression * config.w_reg
        + classification * config.w_cls
        + alignment * config.w_csra
    )
    breakdown = LossBreakdown(
        total.item(), regression.item(), classification.item(), alignment.item()
    )
    return total, breakdown


# --- Router objective ---


def router_target(q: np.ndarray, groups: int, atol: float = 1e-8) -> np.ndarray:
    """Per-group mass of the target distribution(s) q [..., V] -> [..., N]."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim == 0 or q.shape[-1] % groups:
        raise DistributionError(
            f"distribution of width {q.shape} cannot split into {groups} groups"
        )
    if not np.isfinite(q).all() or (q < 0).any():
        raise DistributionError("distribution has negative or non-finite entries")
    if not np.allclose(q.sum(axis=-1), 1.0, rtol=0.0, atol=atol):
        raise DistributionError("distribution does not sum to 1")
    return group_sums(q, groups)


def router_loss(
    q_router: np.ndarray | Tensor, p_router: Tensor, floor: float = 1e-12
) -> Tensor:
    """Mean over rows of -Σ_n q_router(n) log max(p_router(n), floor)."""
    q = Tensor.lift(q_router)
    rows = p_router.data.size // p_router.shape[-1]
    return (q * F.log_clamped(p_router, floor)).sum() * (-1.0 / rows)
