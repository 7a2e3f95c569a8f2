# src/draftlab/training/batches.py
from typing import NamedTuple

import numpy as np

from draftlab.models.target import TargetModel
from draftlab.tensor import Tensor, no_grad
from draftlab.tensor import functional as F


class TrainBatch(NamedTuple):
    """
    Token windows with the frozen target's features and next-token
    distributions at every position.
    """

    tokens: np.ndarray
    target_features: np.ndarray
    target_probs: np.ndarray

    @property
    def draft_positions(self) -> int:
        return self.tokens.shape[1] - 1


class StepFeatures(NamedTuple):
    """Draft output features of each training step, each [B, S - 1, d]."""

    features: list[Tensor]
    inputs: list[Tensor]

    @property
    def steps(self) -> int:
        return len(self.features)


def make_batch(target: TargetModel, tokens: np.ndarray) -> TrainBatch:
    with no_grad():
        features, logits = target.forward(tokens)
        probs = F.softmax(logits, axis=-1)
    return TrainBatch(np.asarray(tokens, dtype=np.int64), features.data, probs.data)
