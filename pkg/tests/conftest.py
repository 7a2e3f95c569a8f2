# tests/conftest.py
import numpy as np
import pytest

from draftlab.models.config import ModelConfig
from draftlab.models.draft import DraftModel
from draftlab.models.router import RouterHead
from draftlab.models.target import TargetModel

TINY = ModelConfig(
    vocab_size=16,
    hidden_size=16,
    num_layers=2,
    num_heads=2,
    intermediate_size=32,
    max_seq_len=64,
    head_groups=4,
    router_top_n=2,
)


@pytest.fixture
def tiny_config() -> ModelConfig:
    return TINY


@pytest.fixture
def build_models():
    """Returns a function building identical (target, draft, router) triples."""

    def _build(config: ModelConfig = TINY, seed: int = 0):
        target = TargetModel(ModelConfig(**{**config.to_dict(), "init_seed": seed}))
        draft = DraftModel(target.config, target)
        router = RouterHead(target.config)
        return target, draft, router

    return _build


@pytest.fixture
def tiny_target() -> TargetModel:
    return TargetModel(TINY)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)
