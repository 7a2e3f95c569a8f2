# src/draftlab/shared/models.py
"""
This module defines the canonical records exchanged between the lab's
modules: what a drafting-verification cycle produced, how a training loss
decomposes, and how many parameters a model carries.

These records are the data contract between the engine, the trainers, the
analytics and the contracts.
"""

from enum import Enum
from typing import NamedTuple

# --- Engine ---


class DecodeMode(str, Enum):
    """Shape of the candidate structure drafted per cycle."""

    CHAIN = "chain"
    TREE = "tree"


class ProposalKind(Enum):
    """How the drafted candidates of a tree were chosen from the draft law."""

    SAMPLED = "sampled"
    POINT_MASS = "point_mass"


class CycleRecord(NamedTuple):
    """Acceptance data of one drafting-verification cycle."""

    cycle: int
    drafted: int
    accepted: int
    emitted_tokens: tuple[int, ...]
    depth_flags: tuple[bool, ...]
    active_groups: tuple[int, ...]
    draft_ms: float
    verify_ms: float

    @property
    def emitted(self) -> int:
        return len(self.emitted_tokens)

    def to_trace(self) -> dict:
        """The JSON-lines trace object of this cycle."""
        return {
            "cycle": self.cycle,
            "drafted": self.drafted,
            "accepted": self.accepted,
            "emitted_tokens": list(self.emitted_tokens),
            "active_groups": list(self.active_groups),
            "draft_ms": self.draft_ms,
            "verify_ms": self.verify_ms,
        }


# --- Training ---


class TrainingMethod(str, Enum):
    """Draft training recipe."""

    EAGLE = "eagle"
    HASS = "hass"
    CSRA = "csra"


class LossBreakdown(NamedTuple):
    """The weighted components of one draft training loss evaluation."""

    total: float
    regression: float
    classification: float
    csra: float


# --- Parameter accounting ---


class ParamReport(NamedTuple):
    """
    Exact parameter counts of a model, per component. The embedding matrix
    is the only component excluded from `total_without_embedding`; `total`
    follows the `include_embedding` flag the report was built with.
    """

    components: dict[str, int]
    embedding: int
    include_embedding: bool = False

    @property
    def total_without_embedding(self) -> int:
        return sum(self.components.values())

    @property
    def total_with_embedding(self) -> int:
        return self.total_without_embedding + self.embedding

    @property
    def total(self) -> int:
        if self.include_embedding:
            return self.total_with_embedding
        return self.total_without_embedding

    def component_shares(self) -> dict[str, float]:
        total = self.total_without_embedding
        return {name: count / total for name, count in self.components.items()}
