# src/draftlab/models/target.py
"""
The decoder-only target language model. Its features are the final-norm
hidden states, i.e. exactly the inputs of the LM head.
"""

from collections.abc import Sequence
from typing import NamedTuple

import numpy as np

from draftlab.models.config import ModelConfig
from draftlab.models.layers import DecoderBlock, KVCache, Module, init_matrix
from draftlab.shared.exceptions import CacheStateError, ParameterError, VocabularyError
from draftlab.tensor import Tensor, no_grad
from draftlab.tensor import functional as F


class TargetOutput(NamedTuple):
    features: np.ndarray
    logits: np.ndarray
    cache: KVCache


class TreeOutput(NamedTuple):
    """Target outputs for a batch of tree nodes, not yet committed to a cache."""

    features: np.ndarray
    logits: np.ndarray
    keys: list[np.ndarray]
    values: list[np.ndarray]


def check_tokens(tokens: Sequence[int] | np.ndarray, vocab_size: int) -> np.ndarray:
    ids = np.asarray(tokens, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
        raise VocabularyError(f"token ids must lie in [0, {vocab_size})")
    return ids


class TargetModel(Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.init_seed)
        d, vocab = config.hidden_size, config.vocab_size
        self.embedding = self.register("embedding", init_matrix(rng, vocab, d))
        self.blocks: list[DecoderBlock] = []
        for i in range(config.num_layers):
            block = DecoderBlock(config, rng)
            self.add_child(f"blocks.{i}", block)
            self.blocks.append(block)
        self.final_norm = self.register("final_norm", np.ones(d))
        self.lm_head = self.register("lm_head", init_matrix(rng, d, vocab))

    def new_cache(self) -> KVCache:
        return KVCache(self.config.num_layers)

    def _run(
        self,
        ids: np.ndarray,
        positions: np.ndarray,
        bias: np.ndarray | None,
        cache: KVCache | None,
    ) -> tuple[Tensor, Tensor, list[Tensor], list[Tensor]]:
        x = F.embedding(self.embedding, ids)
        keys, values = [], []
        for i, block in enumerate(self.blocks):
            prefix = cache.layer(i) if cache is not None else None
            x, k, v = block.forward(x, positions, bias, prefix)
            keys.append(k)
            values.append(v)
        features = F.rms_norm(x, self.final_norm, self.config.rms_eps)
        return features, features @ self.lm_head, keys, values

    def forward(self, tokens: np.ndarray) -> tuple[Tensor, Tensor]:
        """Differentiable pass over a batch [B, S]; returns features and logits."""
        ids = check_tokens(tokens, self.config.vocab_size)
        if ids.ndim != 2:
            raise ParameterError("forward expects a [B, S] token batch")
        if ids.shape[1] > self.config.max_seq_len:
            raise ParameterError(
                f"sequence longer than max_seq_len={self.config.max_seq_len}"
            )
        features, logits, _, _ = self._run(ids, np.arange(ids.shape[1]), None, None)
        return features, logits

    def target_forward(
        self, tokens: Sequence[int], cache: KVCache | None = None
    ) -> TargetOutput:
        """
        Runs the full token sequence through the model, reusing `cache` for
        the prefix it already holds. Returns features [n, d] and logits
        [n, V] for the n positions not previously cached, plus the cache
        extended with them.
        """
        ids = check_tokens(tokens, self.config.vocab_size)
        if len(ids) > self.config.max_seq_len:
            raise ParameterError(
                f"sequence longer than max_seq_len={self.config.max_seq_len}"
            )
        cache = cache if cache is not None else self.new_cache()
        cached = len(cache)
        if cached > len(ids) or cache.tokens != ids[:cached].tolist():
            raise CacheStateError("cache does not hold a prefix of the given tokens")
        new = ids[cached:]
        if new.size == 0:
            d, vocab = self.config.hidden_size, self.config.vocab_size
            return TargetOutput(np.zeros((0, d)), np.zeros((0, vocab)), cache)
        with no_grad():
            positions = np.arange(cached, len(ids))
            features, logits, keys, values = self._run(
                new[None, :], positions, None, cache
            )
        cache.append(new.tolist(), [k.data for k in keys], [v.data for v in values])
        return TargetOutput(features.data[0], logits.data[0], cache)

    def forward_tree(
        self,
        cache: KVCache,
        tokens: Sequence[int],
        depths: Sequence[int],
        visible: np.ndarray,
    ) -> TreeOutput:
        """
        Evaluates tree nodes in one pass. Node i sits at position
        `cache.next_position + depths[i]` and attends to the whole cache plus
        the nodes flagged in row i of `visible` [n, n] (its ancestors and
        itself).
        """
        ids = check_tokens(tokens, self.config.vocab_size)
        positions = cache.next_position + np.asarray(depths, dtype=np.int64)
        if positions.size and positions.max() >= self.config.max_seq_len:
            raise ParameterError(f"tree exceeds max_seq_len={self.config.max_seq_len}")
        bias = np.zeros((len(ids), len(cache) + len(ids)))
        bias[:, len(cache):] = np.where(visible, 0.0, F.MASKED)
        with no_grad():
            features, logits, keys, values = self._run(
                ids[None, :], positions, bias, cache
            )
        return TreeOutput(
            features.data[0],
            logits.data[0],
            [k.data for k in keys],
            [v.data for v in values],
        )

    def commit(
        self,
        cache: KVCache,
        tree: TreeOutput,
        tokens: Sequence[int],
        nodes: Sequence[int],
    ) -> None:
        """Appends keys/values of the tree `nodes` (a root path) to `cache`."""
        index = np.asarray(nodes, dtype=np.int64)
        cache.append(
            [tokens[i] for i in nodes],
            [k[:, :, index] for k in tree.keys],
            [v[:, :, index] for v in tree.values],
        )
