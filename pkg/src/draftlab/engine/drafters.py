# src/draftlab/engine/drafters.py
"""
Drafters turn the tree drafted so far into hidden states; the engine reads
draft distributions off those hidden states through the drafter's LM head
(optionally behind the router).

A drafter instance is session state: it owns its caches, so each
generation session needs its own instance (or a `reset()` between runs).
"""

from collections.abc import Sequence
from typing import Protocol, runtime_checkable

import numpy as np

from draftlab.engine.tree import ROOT, DraftTree
from draftlab.models.draft import DraftModel
from draftlab.models.target import TargetModel
from draftlab.shared.exceptions import CacheStateError, ContractViolationError


@runtime_checkable
class Drafter(Protocol):
    @property
    def lm_head(self) -> np.ndarray: ...

    def reset(self) -> None: ...

    def start(self, tokens: Sequence[int], features: np.ndarray) -> None:
        """
        Begins a cycle. `tokens` ends with the root token; `features`
        holds the target features of every token before it.
        """
        ...

    def hidden(self, tree: DraftTree, nodes: Sequence[int]) -> np.ndarray:
        """Hidden states [len(nodes), d] after consuming each node's token."""
        ...


class EagleDrafter:
    """
    Drafts with the trained draft model. Pairs built from target features
    are committed to the draft cache; pairs built from the draft's own
    features live in per-cycle scratch keys and are discarded.
    """

    def __init__(self, draft: DraftModel):
        self.draft = draft
        self.reset()

    @property
    def lm_head(self) -> np.ndarray:
        return self.draft.lm_head.data

    def reset(self) -> None:
        self.cache = self.draft.new_cache()
        self._root_hidden: np.ndarray | None = None
        self._begin_scratch()

    def _begin_scratch(self) -> None:
        self._node_hidden: dict[int, np.ndarray] = {}
        self._scratch_nodes: list[int] = []
        self._scratch: tuple[np.ndarray, np.ndarray] | None = None

    def start(self, tokens: Sequence[int], features: np.ndarray) -> None:
        committed = len(tokens) - 1
        if len(features) != committed:
            raise ContractViolationError(
                "start() needs one target feature per committed token"
            )
        cached = len(self.cache)
        if cached > committed or self.cache.tokens != list(tokens[1 : cached + 1]):
            raise CacheStateError("draft cache does not hold a prefix of the sequence")
        self._begin_scratch()
        if committed == 0:
            self._root_hidden = None
            return
        if cached == committed:
            # every pair is cached; the root hidden state is the last extend's
            return
        # pair s = (feature s-1, token s), for every s not cached yet
        new = range(cached + 1, committed + 1)
        prev = np.stack([features[s - 1] for s in new])
        out = self.draft.extend(prev, [tokens[s] for s in new], self.cache)
        self._root_hidden = out[-1]

    def hidden(self, tree: DraftTree, nodes: Sequence[int]) -> np.ndarray:
        if self._root_hidden is None:
            raise ContractViolationError("no target feature to draft from")
        result = np.zeros((len(nodes), self.draft.config.hidden_size))
        pending = [n for n in nodes if n != ROOT and n not in self._node_hidden]
        if pending:
            self._speculate(tree, pending)
        for row, node in enumerate(nodes):
            result[row] = self._root_hidden if node == ROOT else self._node_hidden[node]
        return result

    def _speculate(self, tree: DraftTree, nodes: list[int]) -> None:
        prev = np.stack(
            [
                self._root_hidden if parent == ROOT else self._node_hidden[parent]
                for parent in (tree.parents[n] for n in nodes)
            ]
        )
        root_position = self.cache.next_position - 1
        positions = np.array([root_position + tree.depths[n] for n in nodes])
        known = len(self._scratch_nodes)
        visible = np.zeros((len(nodes), known + len(nodes)), dtype=bool)
        for row, node in enumerate(nodes):
            ancestors = set(tree.path_to(node))
            for col, other in enumerate(self._scratch_nodes):
                visible[row, col] = other in ancestors
            visible[row, known + row] = True
        tokens = [tree.tokens[n] for n in nodes]
        out, k, v = self.draft.speculate(
            prev, tokens, positions, self.cache, self._scratch, visible
        )
        if self._scratch is None:
            self._scratch = (k, v)
        else:
            self._scratch = (
                np.concatenate([self._scratch[0], k], axis=2),
                np.concatenate([self._scratch[1], v], axis=2),
            )
        self._scratch_nodes.extend(nodes)
        for row, node in enumerate(nodes):
            self._node_hidden[node] = out[row]


class MirrorDrafter:
    """
    Proposes with the target model itself: its draft distributions are the
    target's, so every drafted token is accepted under greedy decoding.
    """

    def __init__(self, target: TargetModel):
        self.target = target
        self.reset()

    @property
    def lm_head(self) -> np.ndarray:
        return self.target.lm_head.data

    def reset(self) -> None:
        self.cache = self.target.new_cache()

    def start(self, tokens: Sequence[int], features: np.ndarray) -> None:
        if len(features) != len(tokens) - 1:
            raise ContractViolationError(
                "start() needs one target feature per committed token"
            )
        self.target.target_forward(list(tokens[:-1]), self.cache)

    def hidden(self, tree: DraftTree, nodes: Sequence[int]) -> np.ndarray:
        out = self.target.forward_tree(
            self.cache, tree.tokens, tree.depths, tree.visible()
        )
        return out.features[list(nodes)]
