# src/draftlab/analytics/speedup.py
"""
Latency and speedup models.

One cycle costs `gamma` draft steps plus one parallel target pass and
emits tau tokens on average, while vanilla decoding pays one target pass
per token:

    SR = tau * L_t / (gamma * L_d + L_t')

With decoding memory-bound, latencies scale with the weights read, so
L_d / L_t can be estimated as W_d / W_t (embedding excluded), which gives

    SR = tau * W_t / (gamma * W_d + W_t)
"""

import statistics
import time
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from draftlab.models.draft import DraftModel
from draftlab.models.target import TargetModel
from draftlab.shared.exceptions import ParameterError
from draftlab.shared.models import ParamReport

GIB = 1024**3


@dataclass(frozen=True)
class LatencyModel:
    """
    Latencies in milliseconds: one target token, the parallel target
    verification pass, and one draft step.
    """

    target_ms: float
    target_verify_ms: float
    draft_ms: float

    def __post_init__(self):
        if self.target_ms <= 0 or self.target_verify_ms <= 0:
            raise ParameterError("target latencies must be positive")
        if self.draft_ms < 0:
            raise ParameterError("draft latency must be >= 0")

    @property
    def verify_inflation(self) -> float:
        return self.target_verify_ms / self.target_ms


def _check_cycle(tau: float, gamma: int) -> None:
    if tau < 1:
        raise ParameterError(f"acceptance length must be >= 1, got {tau}")
    if gamma < 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")


def speedup_from_latency(tau: float, gamma: int, model: LatencyModel) -> float:
    _check_cycle(tau, gamma)
    return tau * model.target_ms / (gamma * model.draft_ms + model.target_verify_ms)


def latency_ratio_estimate(draft_params: int, target_params: int) -> float:
    if target_params <= 0:
        raise ParameterError("target parameter count must be positive")
    if draft_params < 0:
        raise ParameterError("draft parameter count must be >= 0")
    return draft_params / target_params


def speedup_from_params(
    tau: float, gamma: int, draft_params: int, target_params: int
) -> float:
    _check_cycle(tau, gamma)
    ratio = latency_ratio_estimate(draft_params, target_params)
    return tau / (gamma * ratio + 1.0)


def tau_speedup_ratio(tau: float, speedup: float) -> float:
    if speedup <= 0:
        raise ParameterError("speedup must be positive")
    return tau / speedup


def routed_draft_params(
    draft: ParamReport, groups: int, top_n: int, router_params: int = 0
) -> float:
    """Draft weights read per step with `top_n` of `groups` LM-head groups active."""
    if not 1 <= top_n <= groups:
        raise ParameterError(f"top_n must lie in [1, {groups}]")
    lm_head = draft.components["lm_head"]
    active_head = lm_head * top_n / groups
    return draft.total_without_embedding - lm_head + active_head + router_params


def router_params(hidden_size: int, groups: int) -> int:
    return hidden_size * hidden_size + groups * hidden_size


def theoretical_latency_ms(
    params: float, bytes_per_param: float, bandwidth_gib_s: float
) -> float:
    """Memory-bound floor: time to stream the weights once at `bandwidth_gib_s`."""
    if bandwidth_gib_s <= 0:
        raise ParameterError("bandwidth must be positive")
    return params * bytes_per_param / (bandwidth_gib_s * GIB) * 1e3


def _median_ms(
    action: Callable[[], object], repeats: int, clock: Callable[[], float]
) -> float:
    timings = []
    for _ in range(repeats):
        started = clock()
        action()
        timings.append((clock() - started) * 1e3)
    return statistics.median(timings)


def measure_latency(
    target: TargetModel,
    draft: DraftModel,
    context_len: int = 32,
    verify_tokens: int = 60,
    repeats: int = 5,
    seed: int = 0,
    clock: Callable[[], float] = time.perf_counter,
) -> LatencyModel:
    """
    Median latencies of the desk models after a `context_len` prefix: one
    target token, `verify_tokens` target tokens in one pass, and one draft
    step including its LM head.
    """
    if repeats < 1 or context_len < 2 or verify_tokens < 1:
        raise ParameterError(
            "measure_latency needs repeats >= 1, context_len >= 2, verify_tokens >= 1"
        )
    rng = np.random.default_rng(seed)
    vocab = target.config.vocab_size
    context = rng.integers(0, vocab, context_len).tolist()
    cache = target.new_cache()
    features = target.target_forward(context, cache).features

    single = rng.integers(0, vocab, 1).tolist()
    chain = rng.integers(0, vocab, verify_tokens).tolist()
    chain_depths = list(range(verify_tokens))
    chain_visible = np.tril(np.ones((verify_tokens, verify_tokens), dtype=bool))
    target_ms = _median_ms(
        lambda: target.forward_tree(cache, single, [0], np.ones((1, 1), dtype=bool)),
        repeats,
        clock,
    )
    verify_ms = _median_ms(
        lambda: target.forward_tree(cache, chain, chain_depths, chain_visible),
        repeats,
        clock,
    )

    draft_cache = draft.new_cache()
    draft.extend(features[:-1], context[1:], draft_cache)
    position = np.array([draft_cache.next_position])
    one_visible = np.ones((1, 1), dtype=bool)

    def draft_step() -> None:
        out, _, _ = draft.speculate(
            features[-1:], single, position, draft_cache, None, one_visible
        )
        _ = out @ draft.lm_head.data

    draft_ms = _median_ms(draft_step, repeats, clock)
    return LatencyModel(target_ms, verify_ms, draft_ms)
