# src/draftlab/training/config.py
from dataclasses import asdict, dataclass

from draftlab.shared.exceptions import ConfigurationError
from draftlab.shared.models import TrainingMethod


@dataclass(frozen=True)
class TrainConfig:
    """
    Settings of target pretraining and draft training. The loss weights
    combine the per-step regression and classification terms with the
    cross-step alignment term.
    """

    w_reg: float = 0.5
    w_cls: float = 0.1
    w_csra: float = 0.15
    csra_temperature: float = 0.07
    csra_target_positive: bool = True
    steps: int = 3
    batch_size: int = 8
    seq_len: int = 32
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    clip_norm: float = 1.0
    warmup_steps: int = 10
    epochs: int = 4
    batches_per_epoch: int = 50
    target_epochs: int = 4
    holdout_fraction: float = 0.1
    smooth_l1_beta: float = 1.0
    log_every: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("w_reg", "w_cls", "w_csra", "weight_decay", "warmup_steps"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"train.{name} must be >= 0")
        for name in (
            "csra_temperature",
            "steps",
            "batch_size",
            "seq_len",
            "learning_rate",
            "clip_norm",
            "epochs",
            "batches_per_epoch",
            "target_epochs",
            "smooth_l1_beta",
            "log_every",
        ):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"train.{name} must be positive")
        if self.w_csra > 0 and self.steps < 2:
            raise ConfigurationError(
                "train.w_csra > 0 needs train.steps >= 2: cross-step alignment "
                "has no second view with a single step"
            )
        if self.steps > self.seq_len - 1:
            raise ConfigurationError(
                "train.steps cannot exceed the draft positions per window"
            )
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ConfigurationError("train.holdout_fraction must lie in (0, 1)")

    @classmethod
    def for_method(cls, values: dict, method: TrainingMethod) -> "TrainConfig":
        """
        Builds the configuration a training recipe runs with: eagle forces
        a single step without alignment, hass keeps the configured steps
        without alignment, csra keeps both.
        """
        values = dict(values)
        if method is TrainingMethod.EAGLE:
            values.update(steps=1, w_csra=0.0)
        elif method is TrainingMethod.HASS:
            values["w_csra"] = 0.0
        config = cls(**values)
        if method is TrainingMethod.HASS and config.steps < 2:
            raise ConfigurationError("method hass needs train.steps >= 2")
        if method is TrainingMethod.CSRA and config.w_csra <= 0:
            raise ConfigurationError("method csra needs train.w_csra > 0")
        return config

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RouterTrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 5
    batch_size: int = 64
    windows: int = 64
    holdout_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("learning_rate", "epochs", "batch_size", "windows"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"router.{name} must be positive")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ConfigurationError("router.holdout_fraction must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)
