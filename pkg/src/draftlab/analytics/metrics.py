# src/draftlab/analytics/metrics.py
"""Acceptance statistics over the cycle records of one or more generations."""

from collections.abc import Sequence
from dataclasses import asdict, dataclass

from draftlab.shared.exceptions import ParameterError
from draftlab.shared.models import CycleRecord


@dataclass
class Metrics:
    """
    Aggregates of a benchmark. `alpha` maps a draft depth (1-based) to the
    acceptance rate of the token drafted there, among the cycles that
    reached that depth; depths no cycle reached are absent.
    """

    tau: float
    alpha: dict[int, float]
    reached: dict[int, int]
    cycles: int
    draft_ms: float
    verify_ms: float
    vanilla_ms: float = 0.0
    speculative_ms: float = 0.0
    speedup_measured: float = 0.0
    activated_fraction: float = 1.0

    def to_dict(self) -> dict:
        values = asdict(self)
        values["alpha"] = {str(k): v for k, v in self.alpha.items()}
        values["reached"] = {str(k): v for k, v in self.reached.items()}
        return values


def acceptance_length(records: Sequence[CycleRecord]) -> float:
    """Mean tokens emitted per cycle: accepted drafts plus the bonus token."""
    if not records:
        raise ParameterError("acceptance_length needs at least one cycle")
    return sum(r.accepted + 1 for r in records) / len(records)


def reached_depths(records: Sequence[CycleRecord]) -> dict[int, int]:
    reached: dict[int, int] = {}
    for record in records:
        for depth in range(1, len(record.depth_flags) + 1):
            reached[depth] = reached.get(depth, 0) + 1
    return reached


def acceptance_rates(records: Sequence[CycleRecord]) -> dict[int, float]:
    reached = reached_depths(records)
    accepted: dict[int, int] = {depth: 0 for depth in reached}
    for record in records:
        for depth, flag in enumerate(record.depth_flags, start=1):
            accepted[depth] += int(flag)
    return {depth: accepted[depth] / reached[depth] for depth in sorted(reached)}


def activated_fraction(records: Sequence[CycleRecord], groups: int) -> float:
    """Mean share of LM-head groups computed per draft step; 1.0 without a router."""
    steps = [count for record in records for count in record.active_groups]
    if not steps:
        return 1.0
    return sum(steps) / (len(steps) * groups)


def summarize(records: Sequence[CycleRecord], groups: int) -> Metrics:
    return Metrics(
        tau=acceptance_length(records),
        alpha=acceptance_rates(records),
        reached=reached_depths(records),
        cycles=len(records),
        draft_ms=sum(r.draft_ms for r in records),
        verify_ms=sum(r.verify_ms for r in records),
        activated_fraction=activated_fraction(records, groups),
    )
