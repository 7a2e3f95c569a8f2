# src/draftlab/training/rollout.py
"""
Multi-step draft rollout over a training batch.

Step 1 feeds the target features of positions s-1 (single-step training).
Step j > 1 feeds the step j-1 outputs shifted by one position, so the
draft sees its own predictions as it does at inference depth j. The
attention mask mirrors inference as well: at step j the query at draft
position i reads the key at position p <= i produced by step
max(1, j - (i - p)), i.e. the newest feature that would exist at that
point of an inference-time draft chain.
"""

import numpy as np

from draftlab.models.draft import FIRST_DRAFT_POSITION, DraftModel
from draftlab.shared.exceptions import ParameterError
from draftlab.tensor import Tensor, concat
from draftlab.tensor.functional import MASKED
from draftlab.training.batches import StepFeatures, TrainBatch


def rollout_bias(positions: int, step: int) -> np.ndarray:
    """Additive mask [n, step * n] over the keys of steps 1..step, in order."""
    bias = np.full((positions, step * positions), MASKED)
    for i in range(positions):
        for p in range(i + 1):
            source = max(1, step - (i - p))
            bias[i, (source - 1) * positions + p] = 0.0
    return bias


def multi_step_rollout(
    batch: TrainBatch, draft: DraftModel, steps: int
) -> StepFeatures:
    seq_len = batch.tokens.shape[1]
    if steps < 1:
        raise ParameterError("multi_step_rollout needs steps >= 1")
    if steps > seq_len:
        raise ParameterError(f"steps={steps} exceeds the sequence length {seq_len}")
    count = batch.draft_positions
    positions = np.arange(FIRST_DRAFT_POSITION, FIRST_DRAFT_POSITION + count)
    tokens = batch.tokens[:, 1:]
    target = Tensor(batch.target_features[:, :-1])
    first = Tensor(batch.target_features[:, :1])

    outputs: list[Tensor] = []
    inputs: list[Tensor] = []
    keys: list[Tensor] = []
    values: list[Tensor] = []
    for step in range(1, steps + 1):
        if step == 1:
            x = target
        else:
            x = concat([first, outputs[-1][:, :-1]], axis=1)
        prefix = None
        if keys:
            prefix = (concat(keys, axis=2), concat(values, axis=2))
        bias = rollout_bias(count, step)
        out, k, v = draft.forward(x, tokens, positions, bias, prefix)
        inputs.append(x)
        outputs.append(out)
        keys.append(k)
        values.append(v)
    return StepFeatures(outputs, inputs)
