# src/draftlab/engine/config.py
from dataclasses import asdict, dataclass

from draftlab.shared.exceptions import ConfigurationError
from draftlab.shared.models import DecodeMode


@dataclass(frozen=True)
class EngineConfig:
    mode: DecodeMode = DecodeMode.CHAIN
    gamma: int = 4
    tree_depth: int = 6
    tree_budget: int = 60
    temperature: float = 0.0
    use_router: bool = False
    router_top_n: int = 2
    seed: int = 0
    max_new_tokens: int = 64
    end_token: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", DecodeMode(self.mode))
        if self.gamma < 1:
            raise ConfigurationError("engine.gamma must be >= 1")
        if self.tree_depth < 1:
            raise ConfigurationError("engine.tree_depth must be >= 1")
        if self.tree_budget < self.tree_depth:
            raise ConfigurationError("engine.tree_budget must be >= engine.tree_depth")
        if self.temperature < 0:
            raise ConfigurationError("engine.temperature must be >= 0")
        if self.router_top_n < 1:
            raise ConfigurationError("engine.router_top_n must be >= 1")
        if self.max_new_tokens < 0:
            raise ConfigurationError("engine.max_new_tokens must be >= 0")

    @property
    def depth(self) -> int:
        """Deepest draft level a cycle can reach."""
        return self.gamma if self.mode is DecodeMode.CHAIN else self.tree_depth

    @property
    def greedy(self) -> bool:
        return self.temperature == 0

    def to_dict(self) -> dict:
        values = asdict(self)
        values["mode"] = self.mode.value
        return values
