# tests/reference/engine/test_in_memory_drafters.py
import pytest

from draftlab.contracts.drafters import BaseTestDrafterContract
from draftlab.engine.drafters import EagleDrafter, MirrorDrafter


class TestEagleDrafter(BaseTestDrafterContract):
    @pytest.fixture
    def drafter_factory(self, build_models):
        def _factory():
            target, draft, _ = build_models()
            return EagleDrafter(draft), target

        return _factory


class TestMirrorDrafter(BaseTestDrafterContract):
    @pytest.fixture
    def drafter_factory(self, build_models):
        def _factory():
            target, _, _ = build_models()
            return MirrorDrafter(target), target

        return _factory
