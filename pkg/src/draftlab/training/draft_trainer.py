# src/draftlab/training/draft_trainer.py
import logging
from pathlib import Path
from typing import NamedTuple

import numpy as np

from draftlab.models.draft import DraftModel
from draftlab.models.target import TargetModel
from draftlab.observability.tracing import traced_operation
from draftlab.shared.exceptions import ContractViolationError, NumericError
from draftlab.shared.models import LossBreakdown, TrainingMethod
from draftlab.tensor import no_grad
from draftlab.tensor.optim import AdamW
from draftlab.training.batches import TrainBatch, make_batch
from draftlab.training.config import TrainConfig
from draftlab.training.corpus import sample_windows, split_corpus
from draftlab.training.logs import diverged
from draftlab.training.losses import draft_loss
from draftlab.training.rollout import multi_step_rollout

logger = logging.getLogger(__name__)


class DraftTrainResult(NamedTuple):
    draft: DraftModel
    log_rows: list[dict]


def make_optimizer(draft: DraftModel, config: TrainConfig) -> AdamW:
    return AdamW(
        draft.parameters(trainable_only=True),
        lr=config.learning_rate,
        weight_decay=config.weight_decay,
        clip_norm=config.clip_norm,
        warmup_steps=config.warmup_steps,
    )


def evaluate_draft_loss(
    batch: TrainBatch, draft: DraftModel, config: TrainConfig
) -> LossBreakdown:
    with no_grad():
        rollout = multi_step_rollout(batch, draft, config.steps)
        _, breakdown = draft_loss(batch, rollout, draft.lm_head, config)
    return breakdown


def draft_train_step(
    batch: TrainBatch,
    draft: DraftModel,
    config: TrainConfig,
    optimizer: AdamW,
    dump_dir: str | Path | None = None,
) -> LossBreakdown:
    """One optimizer step on `batch`; returns the loss before the update."""
    tied = draft.tied_checksum()
    draft.zero_grad()
    try:
        rollout = multi_step_rollout(batch, draft, config.steps)
        total, breakdown = draft_loss(batch, rollout, draft.lm_head, config)
        total.backward()
        optimizer.step()
    except NumericError as e:
        raise diverged(
            f"draft training diverged: {e}",
            dump_dir,
            {
                "tokens": batch.tokens.astype(np.float64),
                "target_features": batch.target_features,
                **draft.state_dict(),
            },
            {"stage": "train-draft", "optimizer_step": optimizer.t},
        ) from e
    if draft.embedding.grad is not None or draft.lm_head.grad is not None:
        raise ContractViolationError("tied embedding or LM head received a gradient")
    if draft.tied_checksum() != tied:
        raise ContractViolationError(
            "tied embedding or LM head changed during training"
        )
    return breakdown


def train_draft(
    target: TargetModel,
    corpus: np.ndarray,
    config: TrainConfig,
    method: TrainingMethod,
    dump_dir: str | Path | None = None,
) -> DraftTrainResult:
    """Trains a fresh draft model against the frozen `target`."""
    train_tokens, _ = split_corpus(corpus, config.holdout_fraction)
    draft = DraftModel(target.config, target)
    optimizer = make_optimizer(draft, config)
    rng = np.random.default_rng(config.seed)
    rows: list[dict] = []
    step = 0
    logger.info(
        "Draft training started",
        extra={"method": method.value, "steps": config.steps, "w_csra": config.w_csra},
    )
    for epoch in range(config.epochs):
        for _ in range(config.batches_per_epoch):
            windows = sample_windows(
                train_tokens, config.batch_size, config.seq_len, rng
            )
            batch = make_batch(target, windows)
            span_attrs = {"step": step, "method": method.value}
            with traced_operation("training.draft_step", **span_attrs):
                breakdown = draft_train_step(batch, draft, config, optimizer, dump_dir)
            if step % config.log_every == 0:
                row = {"epoch": epoch, "step": step, **_columns(breakdown)}
                rows.append(row)
                logger.info("Draft training step", extra=row)
            step += 1
    return DraftTrainResult(draft, rows)


def _columns(breakdown: LossBreakdown) -> dict:
    return {
        "loss_total": breakdown.total,
        "loss_reg": breakdown.regression,
        "loss_cls": breakdown.classification,
        "loss_csra": breakdown.csra,
    }
