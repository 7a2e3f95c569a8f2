# src/draftlab/contracts/decoding.py
from typing import NamedTuple

import numpy as np
import pytest

from draftlab.engine.config import EngineConfig
from draftlab.engine.drafters import Drafter
from draftlab.engine.generation import generate, vanilla_generate
from draftlab.models.router import RouterHead
from draftlab.models.target import TargetModel
from draftlab.shared.models import DecodeMode

PROMPTS = 50
MAX_NEW_TOKENS = 12


class DecodingSetup(NamedTuple):
    target: TargetModel
    drafter: Drafter
    router: RouterHead


def seeded_prompts(
    vocab: int, count: int = PROMPTS, longest: int = 8
) -> list[list[int]]:
    rng = np.random.default_rng(1234)
    lengths = [int(rng.integers(1, longest + 1)) for _ in range(count)]
    return [rng.integers(0, vocab, n).tolist() for n in lengths]


CASES = [
    pytest.param(DecodeMode.CHAIN, False, id="chain"),
    pytest.param(DecodeMode.TREE, False, id="tree"),
    pytest.param(DecodeMode.CHAIN, True, id="chain-router"),
    pytest.param(DecodeMode.TREE, True, id="tree-router"),
]


class BaseTestGreedyEquivalenceContract:
    """
    Contract: at temperature 0 speculative decoding emits exactly the
    tokens of vanilla greedy decoding, whatever the drafter proposes.
    """

    @pytest.fixture
    def setup_factory(self):
        """
        This fixture MUST be implemented by the inheriting test class.
        It returns a zero-argument function building a DecodingSetup: a
        target model, a drafter for it and a router whose group count
        divides the target vocabulary.
        """
        raise NotImplementedError(
            "To use the contract, you must implement the 'setup_factory' fixture."
        )

    @staticmethod
    def _config(mode: DecodeMode, use_router: bool, **overrides) -> EngineConfig:
        values = {
            "mode": mode,
            "gamma": 3,
            "tree_depth": 3,
            "tree_budget": 8,
            "temperature": 0.0,
            "use_router": use_router,
            "router_top_n": 2,
            "max_new_tokens": MAX_NEW_TOKENS,
        }
        values.update(overrides)
        return EngineConfig(**values)

    # --- Start of Contract Tests ---

    @pytest.mark.parametrize("mode, use_router", CASES)
    def test_greedy_output_matches_vanilla(self, setup_factory, mode, use_router):
        setup = setup_factory()
        config = self._config(mode, use_router)

        for prompt in seeded_prompts(setup.target.config.vocab_size):
            expected = vanilla_generate(prompt, setup.target, config)
            result = generate(prompt, setup.target, setup.drafter, config, setup.router)
            assert result.tokens == expected, f"prompt {prompt}"

    @pytest.mark.parametrize("mode, use_router", CASES)
    def test_records_account_for_every_token(self, setup_factory, mode, use_router):
        setup = setup_factory()
        config = self._config(mode, use_router)
        vocab = setup.target.config.vocab_size
        prompt = seeded_prompts(vocab, count=1, longest=4)[0] + [1]

        result = generate(prompt, setup.target, setup.drafter, config, setup.router)

        emitted = [t for r in result.records for t in r.emitted_tokens]
        assert emitted[:MAX_NEW_TOKENS] == result.tokens
        for record in result.records:
            assert record.emitted == record.accepted + 1
            assert record.accepted <= config.depth
            assert len(record.depth_flags) <= config.depth
            budget = config.tree_budget if mode is DecodeMode.TREE else config.gamma
            assert record.drafted <= budget

    def test_single_token_prompt_first_cycle_drafts_nothing(self, setup_factory):
        setup = setup_factory()
        config = self._config(DecodeMode.CHAIN, False)

        result = generate([3], setup.target, setup.drafter, config)

        first = result.records[0]
        assert first.drafted == 0
        assert first.accepted == 0
        assert first.emitted_tokens == (result.tokens[0],)

    def test_zero_new_tokens_is_empty(self, setup_factory):
        setup = setup_factory()
        config = self._config(DecodeMode.CHAIN, False, max_new_tokens=0)

        result = generate([1, 2, 3], setup.target, setup.drafter, config)

        assert result.tokens == []
        assert result.records == []

    def test_end_token_stops_generation(self, setup_factory):
        setup = setup_factory()
        config = self._config(DecodeMode.CHAIN, False)
        prompt = [1, 2, 3]
        reference = vanilla_generate(prompt, setup.target, config)
        stop = reference[2]
        ended = self._config(DecodeMode.CHAIN, False, end_token=stop)

        result = generate(prompt, setup.target, setup.drafter, ended)

        assert result.tokens == reference[: reference.index(stop) + 1]
        assert result.tokens == vanilla_generate(prompt, setup.target, ended)

    def test_generation_is_deterministic(self, setup_factory):
        setup = setup_factory()
        config = self._config(DecodeMode.TREE, True)

        first = generate([5, 6, 7], setup.target, setup.drafter, config, setup.router)
        second = generate([5, 6, 7], setup.target, setup.drafter, config, setup.router)

        assert first.tokens == second.tokens
        assert [r.emitted_tokens for r in first.records] == [
            r.emitted_tokens for r in second.records
        ]
