# src/draftlab/observability/metrics.py
from opentelemetry import metrics

from draftlab.shared.models import CycleRecord

METER_NAME = "draftlab.engine"

CYCLES_TOTAL = "draftlab.engine.cycles.total"
TOKENS_EMITTED = "draftlab.engine.tokens.emitted"
ACCEPTED_LENGTH = "draftlab.engine.accepted_length"
PHASE_DURATION = "draftlab.engine.phase.duration"


class EngineInstruments:
    """
    OpenTelemetry instruments fed by the generation loop. Without an SDK
    meter provider every call is a no-op.
    """

    def __init__(self, meter: metrics.Meter | None = None):
        meter = meter or metrics.get_meter(METER_NAME)
        self._cycles = meter.create_counter(
            CYCLES_TOTAL, description="Counts drafting-verification cycles."
        )
        self._emitted = meter.create_counter(
            TOKENS_EMITTED, description="Counts tokens emitted by cycles."
        )
        self._accepted = meter.create_histogram(
            ACCEPTED_LENGTH,
            description="Accepted draft tokens per cycle.",
        )
        self._duration = meter.create_histogram(
            PHASE_DURATION,
            description="Wall time of the draft and verify phases.",
            unit="ms",
        )

    def record_cycle(self, record: CycleRecord, mode: str) -> None:
        attributes = {"mode": mode}
        self._cycles.add(1, attributes)
        self._emitted.add(record.emitted, attributes)
        self._accepted.record(record.accepted, attributes)
        self._duration.record(record.draft_ms, {**attributes, "phase": "draft"})
        self._duration.record(record.verify_ms, {**attributes, "phase": "verify"})
