# src/draftlab/engine/trace.py
import json
from collections.abc import Iterable
from pathlib import Path

from draftlab.shared.models import CycleRecord


def write_trace(path: str | Path, records: Iterable[CycleRecord]) -> None:
    """One JSON object per cycle, one cycle per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        for record in records:
            handle.write(json.dumps(record.to_trace(), sort_keys=True) + "\n")


def read_trace(path: str | Path) -> list[dict]:
    with Path(path).open() as handle:
        return [json.loads(line) for line in handle if line.strip()]
