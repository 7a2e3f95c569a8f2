# tests/reference/engine/test_in_memory_decoding.py
import numpy as np
import pytest

from draftlab.contracts.decoding import BaseTestGreedyEquivalenceContract, DecodingSetup
from draftlab.engine.drafters import EagleDrafter, MirrorDrafter

# =============================================================================
# 1. DRAFTERS UNDER TEST
# =============================================================================


class NegatedDrafter(EagleDrafter):
    """Proposes from negated hidden states, so its guesses are mostly wrong."""

    def hidden(self, tree, nodes) -> np.ndarray:
        return -super().hidden(tree, nodes)


# =============================================================================
# 2. CONTRACT SUBCLASSES
# =============================================================================


class TestEagleGreedyEquivalence(BaseTestGreedyEquivalenceContract):
    @pytest.fixture
    def setup_factory(self, build_models):
        def _factory():
            target, draft, router = build_models()
            return DecodingSetup(target, EagleDrafter(draft), router)

        return _factory


class TestMirrorGreedyEquivalence(BaseTestGreedyEquivalenceContract):
    @pytest.fixture
    def setup_factory(self, build_models):
        def _factory():
            target, _, router = build_models(seed=2)
            return DecodingSetup(target, MirrorDrafter(target), router)

        return _factory


class TestNegatedGreedyEquivalence(BaseTestGreedyEquivalenceContract):
    @pytest.fixture
    def setup_factory(self, build_models):
        def _factory():
            target, draft, router = build_models(seed=3)
            return DecodingSetup(target, NegatedDrafter(draft), router)

        return _factory
