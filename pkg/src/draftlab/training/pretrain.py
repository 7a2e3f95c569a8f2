# src/draftlab/training/pretrain.py
"""Next-token pretraining of the target model on a byte corpus."""

import logging
from pathlib import Path
from typing import NamedTuple

import numpy as np

from draftlab.models.config import ModelConfig
from draftlab.models.target import TargetModel
from draftlab.observability.tracing import traced_operation
from draftlab.shared.exceptions import DataError, NumericError
from draftlab.tensor import Tensor, no_grad
from draftlab.tensor import functional as F
from draftlab.tensor.optim import AdamW
from draftlab.training.config import TrainConfig
from draftlab.training.corpus import sample_windows, split_corpus, tile_windows
from draftlab.training.logs import diverged

logger = logging.getLogger(__name__)

HELDOUT_CHUNK = 64


class PretrainResult(NamedTuple):
    model: TargetModel
    log_rows: list[dict]
    heldout_ce: float


def next_token_loss(model: TargetModel, windows: np.ndarray) -> Tensor:
    """Mean cross-entropy of predicting windows[:, 1:] from windows[:, :-1]."""
    inputs, targets = windows[:, :-1], windows[:, 1:]
    _, logits = model.forward(inputs)
    log_probs = F.log_softmax(logits, axis=-1)
    batch, length = targets.shape
    rows = np.repeat(np.arange(batch), length)
    cols = np.tile(np.arange(length), batch)
    picked = log_probs[rows, cols, targets.reshape(-1)]
    return -picked.mean()


def heldout_cross_entropy(
    model: TargetModel, tokens: np.ndarray, seq_len: int
) -> float:
    windows = tile_windows(tokens, seq_len + 1)
    total = 0.0
    with no_grad():
        for start in range(0, len(windows), HELDOUT_CHUNK):
            chunk = windows[start : start + HELDOUT_CHUNK]
            total += next_token_loss(model, chunk).item() * len(chunk)
    return total / len(windows)


def pretrain_target(
    corpus: np.ndarray,
    model_config: ModelConfig,
    config: TrainConfig,
    dump_dir: str | Path | None = None,
) -> PretrainResult:
    if len(corpus) == 0:
        raise DataError("cannot pretrain on an empty corpus")
    train_tokens, heldout = split_corpus(corpus, config.holdout_fraction)
    window = config.seq_len + 1
    if len(train_tokens) < window or len(heldout) < window:
        raise DataError(
            f"corpus of {len(corpus)} tokens is too short "
            f"for windows of {window} tokens"
        )

    model = TargetModel(model_config)
    optimizer = AdamW(
        model.parameters(),
        lr=config.learning_rate,
        weight_decay=config.weight_decay,
        clip_norm=config.clip_norm,
        warmup_steps=config.warmup_steps,
    )
    rng = np.random.default_rng(config.seed)
    rows: list[dict] = []
    step = 0
    with traced_operation("training.pretrain_target", epochs=config.target_epochs):
        for epoch in range(config.target_epochs):
            for _ in range(config.batches_per_epoch):
                windows = sample_windows(train_tokens, config.batch_size, window, rng)
                model.zero_grad()
                try:
                    loss = next_token_loss(model, windows)
                    loss.backward()
                    optimizer.step()
                except NumericError as e:
                    raise diverged(
                        f"target pretraining diverged: {e}",
                        dump_dir,
                        {"windows": windows.astype(np.float64), **model.state_dict()},
                        {"stage": "train-target", "epoch": epoch, "step": step},
                    ) from e
                if step % config.log_every == 0:
                    row = {"epoch": epoch, "step": step, "loss_total": loss.item()}
                    rows.append(row)
                    logger.info(
                        "Target training step",
                        extra={"epoch": epoch, "step": step, "loss_total": loss.item()},
                    )
                step += 1

    heldout_ce = heldout_cross_entropy(model, heldout, config.seq_len)
    logger.info("Target pretraining finished", extra={"heldout_ce": heldout_ce})
    return PretrainResult(model, rows, heldout_ce)
