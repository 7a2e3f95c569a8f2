# src/draftlab/training/logs.py
import csv
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from draftlab.models.serialization import write_tensors
from draftlab.shared.exceptions import TrainingDivergedError

logger = logging.getLogger(__name__)

DRAFT_LOG_COLUMNS = ("epoch", "step", "loss_total", "loss_reg", "loss_cls", "loss_csra")
TARGET_LOG_COLUMNS = ("epoch", "step", "loss_total")
ROUTER_LOG_COLUMNS = ("epoch", "step", "loss_router", "accuracy")


def write_log_csv(
    path: str | Path, columns: Sequence[str], rows: Sequence[dict]
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({column: row[column] for column in columns})


def diverged(
    message: str,
    dump_dir: str | Path | None,
    tensors: dict[str, np.ndarray],
    metadata: dict,
) -> TrainingDivergedError:
    """
    Writes the offending inputs and weights to `dump_dir` (when given) and
    returns the error to raise.
    """
    dump_path = None
    if dump_dir is not None:
        path = Path(dump_dir) / "diverged.bin"
        write_tensors(path, {"kind": "diagnostic", **metadata}, tensors)
        dump_path = str(path)
    logger.error(message, extra={"dump_path": dump_path, **metadata})
    return TrainingDivergedError(message, dump_path)
