# src/draftlab/models/serialization.py
"""
Binary tensor container used for model weights and cached router features.

Layout (little-endian):
    magic b"DRAFTLAB" | uint32 version | uint32 n + n bytes of JSON metadata
    | uint32 tensor count | per tensor: uint32 n + n bytes of name,
    uint32 rank, rank x uint64 dims, float64 data
"""

import json
import logging
import struct
from pathlib import Path

import numpy as np

from draftlab.models.config import ModelConfig
from draftlab.models.draft import DraftModel
from draftlab.models.router import RouterHead
from draftlab.models.target import TargetModel
from draftlab.shared.exceptions import DependencyError, WeightFormatError

logger = logging.getLogger(__name__)

MAGIC = b"DRAFTLAB"
VERSION = 1
_FLOAT = np.dtype("<f8")


def write_tensors(
    path: str | Path, metadata: dict, tensors: dict[str, np.ndarray]
) -> None:
    meta = json.dumps(metadata, sort_keys=True).encode()
    parts = [
        MAGIC,
        struct.pack("<II", VERSION, len(meta)),
        meta,
        struct.pack("<I", len(tensors)),
    ]
    for name, array in tensors.items():
        encoded = name.encode()
        array = np.ascontiguousarray(array, dtype=_FLOAT)
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", array.ndim))
        parts.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        parts.append(array.tobytes())
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, payload: bytes, source: str):
        self.payload = payload
        self.offset = 0
        self.source = source

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise WeightFormatError(f"{self.source}: truncated container")
        chunk = self.payload[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_tensors(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    reader = _Reader(Path(path).read_bytes(), str(path))
    if reader.take(len(MAGIC)) != MAGIC:
        raise WeightFormatError(f"{path}: bad magic")
    version, meta_len = reader.unpack("<II")
    if version != VERSION:
        raise WeightFormatError(f"{path}: unsupported version {version}")
    try:
        metadata = json.loads(reader.take(meta_len).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise WeightFormatError(f"{path}: unreadable metadata") from e
    (count,) = reader.unpack("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<I")
        name = reader.take(name_len).decode()
        (rank,) = reader.unpack("<I")
        shape = reader.unpack(f"<{rank}Q")
        size = int(np.prod(shape, dtype=np.int64))
        data = np.frombuffer(reader.take(size * _FLOAT.itemsize), dtype=_FLOAT)
        tensors[name] = data.reshape(shape).astype(np.float64)
    if reader.offset != len(reader.payload):
        raise WeightFormatError(f"{path}: trailing bytes after last tensor")
    return metadata, tensors


def _require(path: str | Path, stage: str) -> None:
    if not Path(path).is_file():
        raise DependencyError(stage, str(path))


def _read_kind(path: str | Path, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    metadata, tensors = read_tensors(path)
    if metadata.get("kind") != kind:
        raise WeightFormatError(
            f"{path}: expected a {kind} file, got {metadata.get('kind')}"
        )
    return metadata, tensors


# --- Models ---


def save_target(model: TargetModel, path: str | Path) -> None:
    metadata = {"kind": "target", "config": model.config.to_dict()}
    write_tensors(path, metadata, model.state_dict())
    logger.info("Saved target weights", extra={"path": str(path)})


def load_target(path: str | Path) -> TargetModel:
    _require(path, "train-target")
    metadata, tensors = _read_kind(path, "target")
    model = TargetModel(ModelConfig.from_dict(metadata["config"]))
    model.load_state_dict(tensors)
    return model


def save_draft(draft: DraftModel, path: str | Path) -> None:
    metadata = {
        "kind": "draft",
        "config": draft.config.to_dict(),
        "tied_checksum": draft.tied_checksum(),
    }
    write_tensors(path, metadata, draft.state_dict())
    logger.info("Saved draft weights", extra={"path": str(path)})


def load_draft(path: str | Path, target: TargetModel) -> DraftModel:
    _require(path, "train-draft")
    metadata, tensors = _read_kind(path, "draft")
    draft = DraftModel(ModelConfig.from_dict(metadata["config"]), target)
    if draft.tied_checksum() != metadata.get("tied_checksum"):
        raise WeightFormatError(f"{path}: draft was trained against a different target")
    draft.load_state_dict(tensors)
    return draft


def save_router(router: RouterHead, path: str | Path) -> None:
    metadata = {"kind": "router", "config": router.config.to_dict()}
    write_tensors(path, metadata, router.state_dict())
    logger.info("Saved router weights", extra={"path": str(path)})


def load_router(path: str | Path) -> RouterHead:
    _require(path, "train-router")
    metadata, tensors = _read_kind(path, "router")
    router = RouterHead(ModelConfig.from_dict(metadata["config"]))
    router.load_state_dict(tensors)
    return router
