# src/draftlab/models/draft.py
"""
The feature-level autoregressive draft model: one decoder block fed with
the fusion of a token embedding and the previous position's feature.

The token embedding and the LM head are copies of the target's tensors,
held outside the trainable parameter set; they never receive updates.
The draft has no final norm, so the block output is both the feature that
is fed back on the next step and the hidden state read by the LM head and
the router.
"""

from collections.abc import Sequence
from typing import NamedTuple

import numpy as np

from draftlab.models.config import ModelConfig
from draftlab.models.layers import (
    DecoderBlock,
    KVCache,
    Module,
    init_matrix,
    tensor_checksum,
)
from draftlab.models.target import TargetModel, check_tokens
from draftlab.shared.exceptions import ParameterError
from draftlab.tensor import Tensor, concat, no_grad
from draftlab.tensor import functional as F

# Draft position s consumes (feature at s-1, token at s), so the first pair
# sits at position 1.
FIRST_DRAFT_POSITION = 1


class DraftStep(NamedTuple):
    feature: np.ndarray
    hidden: np.ndarray
    cache: KVCache


class DraftModel(Module):
    def __init__(self, config: ModelConfig, target: TargetModel):
        super().__init__()
        if target.config.hidden_size != config.hidden_size or (
            target.config.vocab_size != config.vocab_size
        ):
            raise ParameterError("draft and target disagree on hidden or vocab size")
        self.config = config
        rng = np.random.default_rng(config.init_seed + 1)
        d = config.hidden_size
        self.embedding = target.embedding.detach()
        self.lm_head = target.lm_head.detach()
        self.fusion = self.register("fusion", init_matrix(rng, 2 * d, d))
        self.block = DecoderBlock(config, rng)
        self.add_child("block", self.block)

    def tied_checksum(self) -> str:
        tied = [("embedding", self.embedding), ("lm_head", self.lm_head)]
        return tensor_checksum(tied)

    def new_cache(self) -> KVCache:
        return KVCache(1, start_position=FIRST_DRAFT_POSITION)

    def _fuse(self, features: Tensor, tokens: np.ndarray) -> Tensor:
        ids = check_tokens(tokens, self.config.vocab_size)
        embedded = F.embedding(self.embedding, ids)
        return concat([embedded, features], axis=-1) @ self.fusion

    def forward(
        self,
        features: Tensor,
        tokens: np.ndarray,
        positions: np.ndarray,
        bias: np.ndarray | None = None,
        prefix: tuple[Tensor, Tensor] | None = None,
    ) -> tuple[Tensor, Tensor, Tensor]:
        """
        Differentiable pass over previous features [B, S, d] and tokens
        [B, S]. Returns output features and the keys/values of the pass.
        """
        return self.block.forward(self._fuse(features, tokens), positions, bias, prefix)

    def logits(self, hidden: Tensor) -> Tensor:
        return hidden @ self.lm_head

    # --- Inference ---

    def extend(
        self, prev_features: np.ndarray, tokens: Sequence[int], cache: KVCache
    ) -> np.ndarray:
        """Commits pairs (prev_features[i], tokens[i]) to `cache`; returns features."""
        count = len(tokens)
        positions = cache.next_position + np.arange(count)
        if positions.size and positions.max() >= self.config.max_seq_len:
            raise ParameterError(f"draft exceeds max_seq_len={self.config.max_seq_len}")
        with no_grad():
            out, k, v = self.forward(
                Tensor(np.asarray(prev_features).reshape(1, count, -1)),
                np.asarray(tokens).reshape(1, count),
                positions,
                prefix=cache.layer(0),
            )
        cache.append(list(tokens), [k.data], [v.data])
        return out.data[0]

    def draft_forward(
        self, prev_feature: np.ndarray, token: int, cache: KVCache
    ) -> DraftStep:
        feature = self.extend(np.asarray(prev_feature)[None, :], [token], cache)[0]
        return DraftStep(feature, feature, cache)

    def speculate(
        self,
        prev_features: np.ndarray,
        tokens: Sequence[int],
        positions: np.ndarray,
        cache: KVCache,
        scratch: tuple[np.ndarray, np.ndarray] | None,
        visible: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Runs speculative pairs without committing them. Each pair attends
        to the whole cache plus the scratch keys of earlier speculative
        pairs and the new pairs flagged in its row of `visible`
        [n, M + n]. Returns features [n, d] and the new keys/values.
        """
        count = len(tokens)
        prefix_parts = [p for p in (cache.layer(0),) if p is not None]
        if scratch is not None:
            prefix_parts.append((Tensor(scratch[0]), Tensor(scratch[1])))
        prefix = None
        if prefix_parts:
            prefix = (
                concat([p[0] for p in prefix_parts], axis=2),
                concat([p[1] for p in prefix_parts], axis=2),
            )
        bias = np.zeros((count, len(cache) + visible.shape[1]))
        bias[:, len(cache):] = np.where(visible, 0.0, F.MASKED)
        with no_grad():
            out, k, v = self.forward(
                Tensor(np.asarray(prev_features).reshape(1, count, -1)),
                np.asarray(tokens).reshape(1, count),
                np.asarray(positions),
                bias=bias,
                prefix=prefix,
            )
        return out.data[0], k.data, v.data
