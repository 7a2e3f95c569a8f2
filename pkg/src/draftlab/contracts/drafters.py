# src/draftlab/contracts/drafters.py
import math

import numpy as np
import pytest

from draftlab.engine.drafters import Drafter
from draftlab.engine.tree import ROOT, DraftTree
from draftlab.models.target import TargetModel
from draftlab.shared.exceptions import ContractViolationError

PROMPT = [4, 1, 7, 2, 9]


class BaseTestDrafterContract:
    """
    Contract for Drafter implementations: hidden states for tree nodes must
    not depend on how the nodes are batched or on the cache history.
    """

    @pytest.fixture
    def drafter_factory(self):
        """
        This fixture MUST be implemented by the inheriting test class.
        It returns a zero-argument function building a fresh
        (drafter, target) pair; repeated calls must build identical models.
        """
        raise NotImplementedError(
            "To use the contract, you must implement the 'drafter_factory' fixture."
        )

    # --- Helpers ---

    @staticmethod
    def _started(drafter: Drafter, target: TargetModel, tokens: list[int]) -> None:
        features = target.target_forward(tokens[:-1]).features
        drafter.reset()
        drafter.start(tokens, features)

    @staticmethod
    def _small_tree() -> DraftTree:
        """Root with two children; the first child has one child of its own."""
        tree = DraftTree.rooted(PROMPT[-1])
        first = tree.add(3, ROOT, math.log(0.5))
        tree.add(5, ROOT, math.log(0.25))
        tree.add(6, first, math.log(0.25))
        return tree

    # --- Start of Contract Tests ---

    def test_lm_head_shape(self, drafter_factory):
        drafter, target = drafter_factory()

        config = target.config
        assert drafter.lm_head.shape == (config.hidden_size, config.vocab_size)

    def test_root_hidden_is_deterministic(self, drafter_factory):
        drafter, target = drafter_factory()
        tree = DraftTree.rooted(PROMPT[-1])

        self._started(drafter, target, PROMPT)
        first = drafter.hidden(tree, [ROOT])
        self._started(drafter, target, PROMPT)
        second = drafter.hidden(tree, [ROOT])

        assert first.shape == (1, target.config.hidden_size)
        np.testing.assert_array_equal(first, second)

    def test_batched_and_sequential_hidden_agree(self, drafter_factory):
        drafter, target = drafter_factory()
        tree = self._small_tree()

        self._started(drafter, target, PROMPT)
        drafter.hidden(tree, [ROOT])
        batched = drafter.hidden(tree, [1, 2])
        deepest = drafter.hidden(tree, [3])

        self._started(drafter, target, PROMPT)
        drafter.hidden(tree, [ROOT])
        one = drafter.hidden(tree, [1])
        deep_first = drafter.hidden(tree, [3])
        two = drafter.hidden(tree, [2])

        np.testing.assert_allclose(batched[0], one[0], atol=1e-10)
        np.testing.assert_allclose(batched[1], two[0], atol=1e-10)
        np.testing.assert_allclose(deepest[0], deep_first[0], atol=1e-10)

    def test_incremental_start_matches_fresh_start(self, drafter_factory):
        drafter, target = drafter_factory()
        fresh, _ = drafter_factory()
        tree = DraftTree.rooted(PROMPT[-1])

        self._started(drafter, target, PROMPT[:3])
        drafter.hidden(DraftTree.rooted(PROMPT[2]), [ROOT])
        drafter.start(PROMPT, target.target_forward(PROMPT[:-1]).features)
        incremental = drafter.hidden(tree, [ROOT])
        self._started(fresh, target, PROMPT)
        from_scratch = fresh.hidden(tree, [ROOT])

        np.testing.assert_allclose(incremental, from_scratch, atol=1e-10)

    def test_restart_on_the_same_prefix_keeps_the_root_hidden(self, drafter_factory):
        drafter, target = drafter_factory()
        features = target.target_forward(PROMPT[:-1]).features
        tree = self._small_tree()

        self._started(drafter, target, PROMPT)
        before = drafter.hidden(tree, [ROOT, 1])
        drafter.start(PROMPT, features)
        after = drafter.hidden(tree, [ROOT, 1])

        np.testing.assert_allclose(after, before, atol=1e-10)

    def test_start_rejects_missing_features(self, drafter_factory):
        drafter, target = drafter_factory()
        features = target.target_forward(PROMPT[:-2]).features
        drafter.reset()

        with pytest.raises(ContractViolationError):
            drafter.start(PROMPT, features)

    def test_hidden_of_children_differs_from_root(self, drafter_factory):
        drafter, target = drafter_factory()
        tree = self._small_tree()

        self._started(drafter, target, PROMPT)
        hidden = drafter.hidden(tree, [ROOT, 1])

        assert not np.allclose(hidden[0], hidden[1])
