# tests/reference/engine/test_generation.py
import json

import numpy as np
import pytest

from draftlab.engine.config import EngineConfig
from draftlab.engine.drafters import EagleDrafter, MirrorDrafter
from draftlab.engine.generation import generate, vanilla_generate
from draftlab.engine.sampler import NumpySampler
from draftlab.engine.trace import read_trace, write_trace
from draftlab.engine.tree import ROOT, DraftTree
from draftlab.engine.verification import (
    accept_greedy,
    tempered_probs,
    verify_greedy,
    verify_sampling,
)
from draftlab.shared.exceptions import (
    ConfigurationError,
    DistributionError,
    ParameterError,
)
from draftlab.shared.models import DecodeMode

# ===== 1. Configuration =====


@pytest.mark.parametrize(
    "values",
    [
        {"gamma": 0},
        {"tree_depth": 0},
        {"tree_depth": 6, "tree_budget": 5},
        {"temperature": -0.1},
        {"router_top_n": 0},
        {"max_new_tokens": -1},
        {"mode": "beam"},
    ],
)
def test_invalid_engine_settings_are_rejected(values):
    with pytest.raises((ConfigurationError, ValueError)):
        EngineConfig(**values)


def test_engine_depth_follows_the_mode():
    assert EngineConfig(gamma=5).depth == 5
    assert EngineConfig(mode="tree", tree_depth=4).depth == 4
    assert EngineConfig(mode="tree").to_dict()["mode"] == "tree"


# ===== 2. Greedy acceptance =====


def test_greedy_acceptance_walks_while_the_target_agrees():
    tree = DraftTree.rooted(0)
    a = tree.add(1, ROOT, 0.0)
    tree.add(2, a, 0.0)
    logits = np.array([[0, 5, 0], [0, 4, 0], [3, 0, 0]], dtype=float)

    verdict = accept_greedy(tree, logits)

    assert verdict.path == [ROOT, a]
    assert verdict.bonus == 1
    assert verdict.depth_flags == (True, False)
    assert verdict.accepted == 1


def test_greedy_acceptance_picks_the_matching_sibling():
    tree = DraftTree.rooted(0)
    tree.add(1, ROOT, 0.0)
    b = tree.add(2, ROOT, 0.0)
    logits = np.array([[0, 0, 9], [1, 0, 0], [0, 7, 0]], dtype=float)

    verdict = accept_greedy(tree, logits)

    assert verdict.path == [ROOT, b]
    assert verdict.bonus == 1


def test_tree_accepts_at_least_as_much_as_the_chain_it_contains(tiny_target):
    prompt = [4, 1, 7, 2]
    cache = tiny_target.new_cache()
    tiny_target.target_forward(prompt[:-1], cache)
    rng = np.random.default_rng(8)

    for _ in range(10):
        path = rng.integers(0, 16, size=3).tolist()
        chain = DraftTree.rooted(prompt[-1])
        tree = DraftTree.rooted(prompt[-1])
        chain_node = tree_node = ROOT
        for token in path:
            chain_node = chain.add(token, chain_node, 0.0)
            tree_node = tree.add(token, tree_node, 0.0)
        for token in range(16):
            if token != path[0]:
                tree.add(token, ROOT, 0.0)

        on_chain = verify_greedy(chain, tiny_target, cache).verdict
        on_tree = verify_greedy(tree, tiny_target, cache).verdict

        assert on_tree.accepted >= max(on_chain.accepted, 1)
        assert len(cache) == len(prompt) - 1


def test_tempered_probs_sharpen_with_low_temperature():
    logits = np.array([1.0, 2.0])

    assert tempered_probs(logits, 0.1)[1] > tempered_probs(logits, 1.0)[1]
    np.testing.assert_allclose(tempered_probs(logits, 1.0).sum(), 1.0)


def test_sampling_verification_needs_a_temperature(tiny_target):
    with pytest.raises(ParameterError):
        cache = tiny_target.new_cache()
        verify_sampling(DraftTree.rooted(1), tiny_target, cache, 0.0, None)


def test_sampler_rejects_malformed_laws():
    with pytest.raises(DistributionError):
        NumpySampler(0).categorical(np.array([0.0, 0.0]))


# ===== 3. Generation loop =====


def test_self_drafting_accepts_every_draft(tiny_target):
    config = EngineConfig(gamma=6, max_new_tokens=21)

    result = generate([1, 2, 3], tiny_target, MirrorDrafter(tiny_target), config)

    assert [r.accepted for r in result.records] == [6, 6, 6]
    assert all(r.emitted == 7 for r in result.records)
    assert all(r.depth_flags == (True,) * 6 for r in result.records)
    assert result.tokens == vanilla_generate([1, 2, 3], tiny_target, config)


@pytest.mark.parametrize(
    "config",
    [
        EngineConfig(gamma=3, max_new_tokens=12),
        EngineConfig(
            mode=DecodeMode.TREE, tree_depth=3, tree_budget=6, max_new_tokens=12
        ),
        EngineConfig(temperature=1.0, seed=3, max_new_tokens=12),
    ],
    ids=["greedy-chain", "greedy-tree", "sampled-chain"],
)
def test_incremental_cache_matches_a_rebuilt_cache_every_cycle(
    build_models, mocker, config
):
    target, draft, _ = build_models()
    commit = target.commit
    checked = []

    def commit_and_rebuild(cache, output, tokens, nodes):
        commit(cache, output, tokens, nodes)
        rebuilt = target.new_cache()
        target.target_forward(cache.tokens, rebuilt)
        for layer in range(target.config.num_layers):
            np.testing.assert_allclose(
                cache.keys[layer], rebuilt.keys[layer], rtol=0, atol=1e-10
            )
            np.testing.assert_allclose(
                cache.values[layer], rebuilt.values[layer], rtol=0, atol=1e-10
            )
        checked.append(len(cache))

    mocker.patch.object(target, "commit", side_effect=commit_and_rebuild)

    result = generate([1, 2, 3], target, EagleDrafter(draft), config)

    assert len(checked) == len(result.records)
    assert checked == sorted(checked)


def test_sampled_generation_is_seeded(build_models):
    target, draft, _ = build_models()
    config = EngineConfig(temperature=0.8, seed=5, max_new_tokens=10)

    first = generate([1, 2], target, EagleDrafter(draft), config)
    second = generate([1, 2], target, EagleDrafter(draft), config)

    assert first.tokens == second.tokens
    assert len(first.tokens) == 10
    assert [r.emitted_tokens for r in first.records] == [
        r.emitted_tokens for r in second.records
    ]


def test_sampled_tree_generation_stays_in_the_vocabulary(build_models):
    target, draft, router = build_models()
    config = EngineConfig(
        mode=DecodeMode.TREE,
        tree_depth=3,
        tree_budget=6,
        temperature=1.0,
        use_router=True,
        max_new_tokens=8,
    )

    result = generate([3, 4, 5], target, EagleDrafter(draft), config, router)

    assert len(result.tokens) == 8
    assert all(0 <= t < target.config.vocab_size for t in result.tokens)
    assert all(r.active_groups for r in result.records)


def test_router_mode_needs_a_router(build_models):
    target, draft, _ = build_models()

    with pytest.raises(ParameterError):
        generate(
            [1, 2],
            target,
            EagleDrafter(draft),
            EngineConfig(use_router=True, max_new_tokens=5),
        )


def test_prompt_must_fit_the_context(tiny_target):
    config = EngineConfig(max_new_tokens=60)

    with pytest.raises(ParameterError):
        generate([1, 2, 3], tiny_target, MirrorDrafter(tiny_target), config)
    with pytest.raises(ParameterError):
        generate([], tiny_target, MirrorDrafter(tiny_target), EngineConfig())


# ===== 4. Trace =====


def test_trace_has_one_json_object_per_cycle(tiny_target, tmp_path):
    result = generate(
        [1, 2, 3],
        tiny_target,
        MirrorDrafter(tiny_target),
        EngineConfig(max_new_tokens=10),
    )
    path = tmp_path / "trace.jsonl"

    write_trace(path, result.records)

    lines = path.read_text().splitlines()
    assert len(lines) == len(result.records)
    first = json.loads(lines[0])
    assert set(first) == {
        "cycle",
        "drafted",
        "accepted",
        "emitted_tokens",
        "active_groups",
        "draft_ms",
        "verify_ms",
    }
    assert [row["emitted_tokens"] for row in read_trace(path)] == [
        list(r.emitted_tokens) for r in result.records
    ]
