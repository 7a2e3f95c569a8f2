# src/draftlab/analytics/infonce.py
"""
Cross-step InfoNCE diagnostic: how well the draft's step-i features
identify the same position's step-j feature among all step-i features.
Lower means the steps agree more.
"""

from collections.abc import Sequence

import numpy as np

from draftlab.models.draft import DraftModel
from draftlab.shared.exceptions import DegenerateInputError, ParameterError
from draftlab.tensor import no_grad
from draftlab.training.batches import TrainBatch
from draftlab.training.rollout import multi_step_rollout


def _normalize(features: np.ndarray) -> np.ndarray:
    flat = features.reshape(-1, features.shape[-1])
    norms = np.linalg.norm(flat, axis=-1, keepdims=True)
    if (norms == 0).any():
        raise DegenerateInputError("cannot normalize a zero-norm feature")
    return flat / norms


def pair_infonce(
    queries: np.ndarray, candidates: np.ndarray, temperature: float
) -> tuple[float, int]:
    """Summed InfoNCE of row-aligned queries/candidates [P, d] and the query count."""
    logits = _normalize(queries) @ _normalize(candidates).T / temperature
    peak = logits.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(logits - peak).sum(axis=-1)) + peak[:, 0]
    return float((lse - np.diag(logits)).sum()), len(logits)


def infonce_matrix(
    step_features: Sequence[Sequence[np.ndarray]], temperature: float = 0.07
) -> np.ndarray:
    """
    `step_features[b][i]` holds step i's features [B, S, d] of evaluation
    batch b. Entry (i, j), i > j, is the mean over all queries; other
    entries are NaN.
    """
    if temperature <= 0:
        raise ParameterError("temperature must be positive")
    steps = len(step_features[0])
    if steps < 2:
        raise ParameterError("cross-step InfoNCE needs at least 2 steps")
    matrix = np.full((steps, steps), np.nan)
    for i in range(steps):
        for j in range(i):
            total, count = 0.0, 0
            for batch in step_features:
                part, n = pair_infonce(batch[j], batch[i], temperature)
                total += part
                count += n
            matrix[i, j] = total / count
    return matrix


def cross_step_infonce(
    draft: DraftModel,
    batches: Sequence[TrainBatch],
    steps: int,
    temperature: float = 0.07,
) -> np.ndarray:
    if steps < 2:
        raise ParameterError("cross-step InfoNCE needs at least 2 steps")
    if not batches:
        raise ParameterError("cross-step InfoNCE needs at least one evaluation batch")
    collected = []
    with no_grad():
        for batch in batches:
            rollout = multi_step_rollout(batch, draft, steps)
            collected.append([f.data for f in rollout.features])
    return infonce_matrix(collected, temperature)
