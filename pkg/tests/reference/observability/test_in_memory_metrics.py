# tests/reference/observability/test_in_memory_metrics.py
import pytest
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import InMemoryMetricReader

from draftlab.engine.config import EngineConfig
from draftlab.engine.drafters import MirrorDrafter
from draftlab.engine.generation import generate
from draftlab.observability.metrics import (
    ACCEPTED_LENGTH,
    CYCLES_TOTAL,
    METER_NAME,
    PHASE_DURATION,
    TOKENS_EMITTED,
    EngineInstruments,
)
from draftlab.shared.models import CycleRecord

RECORD = CycleRecord(
    cycle=0,
    drafted=4,
    accepted=2,
    emitted_tokens=(5, 6, 7),
    depth_flags=(True, True, False, False),
    active_groups=(),
    draft_ms=1.5,
    verify_ms=2.5,
)


@pytest.fixture
def instrumented():
    """EngineInstruments on an SDK meter, plus a reader of what they recorded."""
    reader = InMemoryMetricReader()
    meter_provider = MeterProvider(metric_readers=[reader])
    instruments = EngineInstruments(meter=meter_provider.get_meter(METER_NAME))

    def get_metrics():
        data = reader.get_metrics_data()
        return {
            metric.name: metric.data.data_points
            for resource in data.resource_metrics
            for scope in resource.scope_metrics
            for metric in scope.metrics
        }

    yield instruments, get_metrics
    meter_provider.shutdown()


def test_one_cycle_feeds_every_instrument(instrumented):
    instruments, get_metrics = instrumented

    instruments.record_cycle(RECORD, "tree")

    points = get_metrics()
    (cycles,) = points[CYCLES_TOTAL]
    assert cycles.value == 1
    assert dict(cycles.attributes) == {"mode": "tree"}
    (emitted,) = points[TOKENS_EMITTED]
    assert emitted.value == 3
    (accepted,) = points[ACCEPTED_LENGTH]
    assert accepted.count == 1 and accepted.sum == 2
    durations = {p.attributes["phase"]: p.sum for p in points[PHASE_DURATION]}
    assert durations == {"draft": 1.5, "verify": 2.5}


def test_generation_counts_its_cycles_and_tokens(instrumented, tiny_target):
    instruments, get_metrics = instrumented
    config = EngineConfig(gamma=2, max_new_tokens=6)

    result = generate(
        [1, 2, 3],
        tiny_target,
        MirrorDrafter(tiny_target),
        config,
        instruments=instruments,
    )

    points = get_metrics()
    assert sum(p.value for p in points[CYCLES_TOTAL]) == len(result.records) == 2
    assert sum(p.value for p in points[TOKENS_EMITTED]) == 6
    (accepted,) = points[ACCEPTED_LENGTH]
    assert accepted.sum == 4
    assert all(p.count == 2 for p in points[PHASE_DURATION])


def test_without_an_sdk_provider_recording_is_a_no_op():
    EngineInstruments().record_cycle(RECORD, "chain")
