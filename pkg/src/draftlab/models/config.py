# src/draftlab/models/config.py
from dataclasses import asdict, dataclass

from draftlab.shared.exceptions import ConfigurationError

ACTIVATIONS = ("silu", "relu", "identity")


@dataclass(frozen=True)
class ModelConfig:
    """
    Shapes shared by the target model, the draft model and the router.
    The vocabulary is split into `head_groups` contiguous groups of
    `vocab_size // head_groups` token ids each.
    """

    vocab_size: int = 256
    hidden_size: int = 64
    num_layers: int = 4
    num_heads: int = 4
    intermediate_size: int = 128
    max_seq_len: int = 256
    head_groups: int = 16
    router_top_n: int = 2
    router_activation: str = "silu"
    rms_eps: float = 1e-6
    rope_base: float = 10000.0
    init_seed: int = 0

    def __post_init__(self):
        for name in (
            "vocab_size",
            "hidden_size",
            "num_layers",
            "num_heads",
            "intermediate_size",
            "max_seq_len",
            "head_groups",
        ):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"model.{name} must be positive")
        if self.hidden_size % self.num_heads:
            raise ConfigurationError("model.hidden_size must be divisible by num_heads")
        if (self.hidden_size // self.num_heads) % 2:
            raise ConfigurationError("model head dimension must be even for rotary")
        if self.vocab_size % self.head_groups:
            raise ConfigurationError(
                "model.vocab_size must be divisible by head_groups"
            )
        if not 1 <= self.router_top_n <= self.head_groups:
            raise ConfigurationError("model.router_top_n must lie in [1, head_groups]")
        if self.router_activation not in ACTIVATIONS:
            raise ConfigurationError(
                f"model.router_activation must be one of {ACTIVATIONS}"
            )

    @property
    def head_dim(self) -> int:
        return self.hidden_size // self.num_heads

    @property
    def group_size(self) -> int:
        return self.vocab_size // self.head_groups

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "ModelConfig":
        return cls(**values)
