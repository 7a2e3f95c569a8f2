# src/draftlab/cli/config.py
"""
The run configuration: one TOML file with a table per concern and a
run-level seed, overridable from the command line. Dumping the effective
configuration next to the artifacts makes every run replayable.
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import toml

from draftlab.engine.config import EngineConfig
from draftlab.models.config import ModelConfig
from draftlab.shared.exceptions import ConfigurationError, DependencyError
from draftlab.shared.models import TrainingMethod
from draftlab.training.config import RouterTrainConfig, TrainConfig

SECTIONS = ("model", "train", "router", "engine", "paths")


@dataclass(frozen=True)
class PathsConfig:
    corpus: str = ""
    corpus_length: int = 200_000
    weights_dir: str = "artifacts/weights"
    output_dir: str = "artifacts/out"

    @property
    def target_weights(self) -> Path:
        return Path(self.weights_dir) / "target.bin"

    @property
    def draft_weights(self) -> Path:
        return Path(self.weights_dir) / "draft.bin"

    @property
    def router_weights(self) -> Path:
        return Path(self.weights_dir) / "router.bin"

    @property
    def router_features(self) -> Path:
        return Path(self.weights_dir) / "router_features.bin"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    model: dict[str, Any] = field(default_factory=dict)
    train: dict[str, Any] = field(default_factory=dict)
    router: dict[str, Any] = field(default_factory=dict)
    engine: dict[str, Any] = field(default_factory=dict)
    paths: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        # builds every section once so invalid values fail at load time
        self.model_config()
        self.router_config()
        self.engine_config()
        self.paths_config()

    # --- Typed views ---

    def model_config(self) -> ModelConfig:
        return _build(ModelConfig, "model", {"init_seed": self.seed, **self.model})

    def train_config(self, method: TrainingMethod | None = None) -> TrainConfig:
        values = {"seed": self.seed, **self.train}
        if method is None:
            return _build(TrainConfig, "train", values)
        try:
            return TrainConfig.for_method(values, method)
        except TypeError as e:
            raise ConfigurationError(f"[train]: {e}") from e

    def router_config(self) -> RouterTrainConfig:
        return _build(RouterTrainConfig, "router", {"seed": self.seed, **self.router})

    def engine_config(self) -> EngineConfig:
        return _build(EngineConfig, "engine", {"seed": self.seed, **self.engine})

    def paths_config(self) -> PathsConfig:
        return _build(PathsConfig, "paths", self.paths)

    # --- Files ---

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls()
        path = Path(path)
        if not path.is_file():
            raise DependencyError("config", str(path))
        try:
            raw = toml.load(path)
        except toml.TomlDecodeError as e:
            raise ConfigurationError(f"{path}: {e}") from e
        unknown = set(raw) - set(SECTIONS) - {"seed"}
        if unknown:
            raise ConfigurationError(f"{path}: unknown sections {sorted(unknown)}")
        return cls(
            seed=int(raw.get("seed", 0)),
            **{name: dict(raw.get(name, {})) for name in SECTIONS},
        )

    def with_overrides(
        self, seed: int | None = None, **sections: dict[str, Any]
    ) -> "RunConfig":
        """Merges `sections[name]` over each table; None leaves a key untouched."""
        merged = {}
        for name in SECTIONS:
            table = dict(getattr(self, name))
            overrides = sections.get(name, {})
            table.update({k: v for k, v in overrides.items() if v is not None})
            merged[name] = table
        return RunConfig(seed=self.seed if seed is None else seed, **merged)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "model": self.model_config().to_dict(),
            "train": {**TrainConfig(seed=self.seed).to_dict(), **self.train},
            "router": self.router_config().to_dict(),
            "engine": {
                k: v for k, v in self.engine_config().to_dict().items() if v is not None
            },
            "paths": asdict(self.paths_config()),
        }

    def dump(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as handle:
            toml.dump(self.to_dict(), handle)


def _build(cls: type, section: str, values: dict[str, Any]):
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigurationError(f"[{section}]: {e}") from e
