# src/draftlab/engine/generation.py
"""
The drafting-verification loop and the vanilla decoder it must match.

Generation keeps one pending token: the newest emitted token, whose
target feature is not computed yet. Each cycle drafts from it, verifies
[pending, drafts...] in one target pass, commits the accepted path to the
target cache and makes the bonus token the new pending token. A prompt of
one token has no target feature yet, so its first cycle drafts nothing.
"""

import logging
import time
from collections.abc import Sequence
from typing import NamedTuple

import numpy as np

from draftlab.engine.config import EngineConfig
from draftlab.engine.drafters import Drafter
from draftlab.engine.drafting import draft_chain, draft_tree
from draftlab.engine.sampler import NumpySampler, TokenSampler
from draftlab.engine.tree import DraftTree
from draftlab.engine.verification import tempered_probs, verify_greedy, verify_sampling
from draftlab.models.layers import token_digest
from draftlab.models.router import RouterHead
from draftlab.models.target import TargetModel, check_tokens
from draftlab.observability.metrics import EngineInstruments
from draftlab.observability.tracing import traced_operation
from draftlab.shared.exceptions import CacheStateError, ParameterError
from draftlab.shared.models import CycleRecord, DecodeMode

logger = logging.getLogger(__name__)


class GenerationResult(NamedTuple):
    tokens: list[int]
    records: list[CycleRecord]


def _check_prompt(
    prompt: Sequence[int], target: TargetModel, config: EngineConfig
) -> list[int]:
    if len(prompt) < 1:
        raise ParameterError("generation needs a prompt of at least one token")
    tokens = check_tokens(prompt, target.config.vocab_size).tolist()
    needed = len(tokens) + config.max_new_tokens + config.depth + 1
    if needed > target.config.max_seq_len:
        raise ParameterError(
            f"prompt, new tokens and draft depth need {needed} positions, "
            f"max_seq_len is {target.config.max_seq_len}"
        )
    return tokens


def _finish(output: list[int], config: EngineConfig) -> tuple[list[int], bool]:
    """Cuts the output after the end token, if present; reports whether it was seen."""
    if config.end_token is not None and config.end_token in output:
        return output[: output.index(config.end_token) + 1], True
    return output, False


def generate(
    prompt: Sequence[int],
    target: TargetModel,
    drafter: Drafter,
    config: EngineConfig,
    router: RouterHead | None = None,
    sampler: TokenSampler | None = None,
    instruments: EngineInstruments | None = None,
) -> GenerationResult:
    tokens = _check_prompt(prompt, target, config)
    if config.max_new_tokens == 0:
        return GenerationResult([], [])
    if config.use_router and router is None:
        raise ParameterError("engine.use_router is set but no router was given")
    router = router if config.use_router else None
    sampler = sampler or NumpySampler(config.seed)
    instruments = instruments or EngineInstruments()

    cache = target.new_cache()
    committed, pending = tokens[:-1], tokens[-1]
    features = target.target_forward(committed, cache).features
    drafter.reset()
    output: list[int] = []
    records: list[CycleRecord] = []

    while len(output) < config.max_new_tokens:
        index = len(records)
        cycle_attrs = {"cycle": index, "mode": config.mode.value}
        with traced_operation("engine.cycle", **cycle_attrs) as span:
            started = time.perf_counter()
            with traced_operation("engine.draft"):
                tree = _draft(
                    drafter, committed, pending, features, config, router, sampler
                )
            drafted_at = time.perf_counter()
            with traced_operation("engine.verify"):
                if config.greedy:
                    result = verify_greedy(tree, target, cache)
                else:
                    result = verify_sampling(
                        tree, target, cache, config.temperature, sampler
                    )
            verified_at = time.perf_counter()

            verdict = result.verdict
            target.commit(cache, result.output, tree.tokens, verdict.path)
            features = np.concatenate([features, result.output.features[verdict.path]])
            committed = committed + [tree.tokens[i] for i in verdict.path]
            pending = verdict.bonus
            if cache.token_checksum() != token_digest(committed):
                raise CacheStateError(
                    "target cache diverged from the accepted sequence"
                )

            emitted = [tree.tokens[i] for i in verdict.path[1:]] + [verdict.bonus]
            record = CycleRecord(
                cycle=index,
                drafted=tree.size,
                accepted=verdict.accepted,
                emitted_tokens=tuple(emitted),
                depth_flags=verdict.depth_flags,
                active_groups=tuple(tree.active_groups),
                draft_ms=(drafted_at - started) * 1e3,
                verify_ms=(verified_at - drafted_at) * 1e3,
            )
            span.set_attribute("drafted", record.drafted)
            span.set_attribute("accepted", record.accepted)
        records.append(record)
        instruments.record_cycle(record, config.mode.value)
        logger.debug("Cycle finished", extra=record.to_trace())
        output.extend(emitted)
        output, ended = _finish(output, config)
        if ended:
            break
    return GenerationResult(output[: config.max_new_tokens], records)


def _draft(
    drafter: Drafter,
    committed: list[int],
    pending: int,
    features: np.ndarray,
    config: EngineConfig,
    router: RouterHead | None,
    sampler: TokenSampler,
) -> DraftTree:
    if not committed:
        return DraftTree.rooted(pending)
    drafter.start(committed + [pending], features)
    if config.mode is DecodeMode.CHAIN:
        return draft_chain(
            drafter,
            pending,
            config.gamma,
            config.temperature,
            sampler,
            router,
            config.router_top_n,
        )
    return draft_tree(
        drafter,
        pending,
        config.tree_depth,
        config.tree_budget,
        config.temperature,
        router,
        config.router_top_n,
    )


def vanilla_generate(
    prompt: Sequence[int],
    target: TargetModel,
    config: EngineConfig,
    sampler: TokenSampler | None = None,
) -> list[int]:
    """Plain autoregressive decoding: argmax at temperature 0, sampling otherwise."""
    tokens = _check_prompt(prompt, target, config)
    sampler = sampler or NumpySampler(config.seed)
    cache = target.new_cache()
    output: list[int] = []
    logits = target.target_forward(tokens, cache).logits[-1]
    while len(output) < config.max_new_tokens:
        if config.greedy:
            token = int(np.argmax(logits))
        else:
            token = sampler.categorical(tempered_probs(logits, config.temperature))
        output.append(token)
        output, ended = _finish(output, config)
        if ended or len(output) == config.max_new_tokens:
            break
        tokens.append(token)
        logits = target.target_forward(tokens, cache).logits[-1]
    return output
