# src/draftlab/analytics/bench.py
import logging
import time
from collections.abc import Callable, Sequence
from typing import NamedTuple

from draftlab.analytics.metrics import Metrics, summarize
from draftlab.engine.config import EngineConfig
from draftlab.engine.drafters import Drafter
from draftlab.engine.generation import generate, vanilla_generate
from draftlab.engine.sampler import NumpySampler
from draftlab.models.router import RouterHead
from draftlab.models.target import TargetModel
from draftlab.shared.exceptions import ParameterError
from draftlab.shared.models import CycleRecord

logger = logging.getLogger(__name__)


class BenchResult(NamedTuple):
    metrics: Metrics
    vanilla_tokens: list[list[int]]
    speculative_tokens: list[list[int]]

    @property
    def outputs_match(self) -> bool:
        return self.vanilla_tokens == self.speculative_tokens


def measured_speedup(
    prompts: Sequence[Sequence[int]],
    target: TargetModel,
    drafter: Drafter,
    config: EngineConfig,
    router: RouterHead | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> BenchResult:
    """
    Decodes every prompt with the vanilla decoder and then speculatively,
    one after the other, with the same seed per prompt. Desk-scale CPU
    timings say nothing about GPU speedups.
    """
    if not prompts:
        raise ParameterError("measured_speedup needs at least one prompt")
    vanilla_ms = speculative_ms = 0.0
    vanilla_tokens, speculative_tokens = [], []
    records: list[CycleRecord] = []
    for index, prompt in enumerate(prompts):
        seed = config.seed + index
        started = clock()
        vanilla = vanilla_generate(prompt, target, config, NumpySampler(seed))
        vanilla_tokens.append(vanilla)
        vanilla_ms += (clock() - started) * 1e3

        started = clock()
        result = generate(prompt, target, drafter, config, router, NumpySampler(seed))
        speculative_ms += (clock() - started) * 1e3
        speculative_tokens.append(result.tokens)
        records.extend(result.records)

    model_config = router.config if router is not None else target.config
    metrics = summarize(records, model_config.head_groups)
    metrics.vanilla_ms = vanilla_ms
    metrics.speculative_ms = speculative_ms
    if speculative_ms > 0:
        metrics.speedup_measured = vanilla_ms / speculative_ms
    logger.info(
        "Benchmark finished",
        extra={
            "prompts": len(prompts),
            "tau": metrics.tau,
            "speedup_measured": metrics.speedup_measured,
            "activated_fraction": metrics.activated_fraction,
        },
    )
    return BenchResult(metrics, vanilla_tokens, speculative_tokens)
