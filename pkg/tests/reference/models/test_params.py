# tests/reference/models/test_params.py
import pytest

from draftlab.models.config import ModelConfig
from draftlab.models.draft import DraftModel
from draftlab.models.params import (
    LLAMA2_7B,
    LLAMA3_8B,
    MEGA,
    PRESETS,
    QWEN25_7B,
    count_params,
)
from draftlab.models.router import RouterHead
from draftlab.models.target import TargetModel
from draftlab.shared.exceptions import ParameterError


@pytest.mark.parametrize(
    "spec, draft_m, target_m",
    [
        (LLAMA3_8B, 741.0, 7157.2),
        (QWEN25_7B, 766.5, 6743.1),
        (LLAMA2_7B, 350.0, 6301.3),
    ],
)
def test_published_architectures(spec, draft_m, target_m):
    draft = spec.draft_report().total / MEGA
    target = spec.target_report().total / MEGA

    assert draft == pytest.approx(draft_m, abs=0.5)
    assert target == pytest.approx(target_m, abs=0.5)


def test_llama3_draft_is_about_a_tenth_of_the_target():
    ratio = LLAMA3_8B.draft_report().total / LLAMA3_8B.target_report().total

    assert ratio == pytest.approx(0.104, rel=0.005)


def test_presets_are_indexed_by_name():
    assert set(PRESETS) == {"llama2-7b", "llama3-8b", "qwen2.5-7b"}
    assert PRESETS["llama3-8b"] is LLAMA3_8B


def test_desk_draft_components():
    target = TargetModel(ModelConfig())
    report = count_params(DraftModel(target.config, target))

    assert report.components == {"fusion": 8192, "block": 41088, "lm_head": 16384}
    assert report.total == 8192 + 41088 + 16384
    assert report.embedding == 256 * 64


def test_desk_target_block_matches_draft_block():
    target = TargetModel(ModelConfig())
    draft = DraftModel(target.config, target)

    blocks = count_params(target).components["blocks"]
    assert blocks == 4 * count_params(draft).components["block"]


def test_embedding_is_counted_only_on_request(tiny_config):
    target = TargetModel(tiny_config)

    without = count_params(target)
    with_embedding = count_params(target, include_embedding=True)

    embedding = tiny_config.vocab_size * tiny_config.hidden_size
    assert with_embedding.total - without.total == embedding
    total = sum(t.data.size for t in target.parameters())
    assert without.total == total - without.embedding


def test_component_shares_sum_to_one():
    shares = LLAMA3_8B.draft_report().component_shares()

    assert sum(shares.values()) == pytest.approx(1.0)
    assert shares["block"] > shares["fusion"]


def test_router_counts(tiny_config):
    report = count_params(RouterHead(tiny_config))

    assert report.embedding == 0
    assert report.total == sum(report.components.values())


def test_unknown_models_are_rejected():
    with pytest.raises(ParameterError):
        count_params(object())
