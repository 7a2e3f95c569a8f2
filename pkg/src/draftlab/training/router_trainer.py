# src/draftlab/training/router_trainer.py
"""
Two-stage router training. Stage one runs the frozen draft over training
windows and records its hidden states together with the grouped target
distribution; stage two fits the router head alone on those records.
"""

import logging
from pathlib import Path
from typing import NamedTuple

import numpy as np

from draftlab.models.config import ModelConfig
from draftlab.models.draft import DraftModel
from draftlab.models.layers import tensor_checksum
from draftlab.models.router import RouterHead
from draftlab.models.serialization import read_tensors, write_tensors
from draftlab.models.target import TargetModel
from draftlab.observability.tracing import traced_operation
from draftlab.shared.exceptions import ContractViolationError, DimensionError
from draftlab.tensor import Tensor, no_grad
from draftlab.tensor import functional as F
from draftlab.tensor.optim import AdamW
from draftlab.training.batches import make_batch
from draftlab.training.config import RouterTrainConfig, TrainConfig
from draftlab.training.corpus import sample_windows, split_corpus
from draftlab.training.losses import router_loss, router_target
from draftlab.training.rollout import multi_step_rollout

logger = logging.getLogger(__name__)


class RouterFeatures(NamedTuple):
    hidden: np.ndarray
    q_router: np.ndarray


class RouterTrainResult(NamedTuple):
    router: RouterHead
    log_rows: list[dict]
    heldout_accuracy: float


def frozen_checksum(draft: DraftModel, target: TargetModel) -> str:
    return tensor_checksum(
        [
            *(("draft." + n, t) for n, t in draft.named_parameters()),
            ("draft.embedding", draft.embedding),
            ("draft.lm_head", draft.lm_head),
            *(("target." + n, t) for n, t in target.named_parameters()),
        ]
    )


def collect_router_features(
    draft: DraftModel,
    target: TargetModel,
    corpus: np.ndarray,
    train_config: TrainConfig,
    config: RouterTrainConfig,
    groups: int,
) -> RouterFeatures:
    """Stage one: draft hidden states [M, d] and grouped target laws [M, N]."""
    rng = np.random.default_rng(config.seed)
    windows = sample_windows(corpus, config.windows, train_config.seq_len, rng)
    hidden, grouped = [], []
    for start in range(0, len(windows), train_config.batch_size):
        batch = make_batch(target, windows[start : start + train_config.batch_size])
        with no_grad():
            rollout = multi_step_rollout(batch, draft, 1)
        d = rollout.features[0].shape[-1]
        hidden.append(rollout.features[0].data.reshape(-1, d))
        probs = batch.target_probs[:, 1:]
        grouped.append(router_target(probs.reshape(-1, probs.shape[-1]), groups))
    return RouterFeatures(np.concatenate(hidden), np.concatenate(grouped))


def cached_router_features(
    cache_path: str | Path | None,
    draft: DraftModel,
    target: TargetModel,
    corpus: np.ndarray,
    train_config: TrainConfig,
    config: RouterTrainConfig,
    groups: int,
) -> RouterFeatures:
    """Stage one, reusing `cache_path` if the same models and settings wrote it."""
    key = {
        "kind": "router_features",
        "models": frozen_checksum(draft, target),
        "seed": config.seed,
        "windows": config.windows,
        "seq_len": train_config.seq_len,
        "groups": groups,
    }
    if cache_path is not None and Path(cache_path).is_file():
        metadata, tensors = read_tensors(cache_path)
        if metadata == key:
            logger.info(
                "Reusing cached router features", extra={"path": str(cache_path)}
            )
            return RouterFeatures(tensors["hidden"], tensors["q_router"])
    features = collect_router_features(
        draft, target, corpus, train_config, config, groups
    )
    if cache_path is not None:
        write_tensors(cache_path, key, features._asdict())
    return features


def evaluate_router(
    router: RouterHead, hidden: np.ndarray, q_router: np.ndarray
) -> float:
    """Top-1 accuracy of the router against argmax(q_router)."""
    predicted = np.argmax(router.router_forward(hidden), axis=-1)
    return float(np.mean(predicted == np.argmax(q_router, axis=-1)))


def train_router(
    draft: DraftModel,
    target: TargetModel,
    corpus: np.ndarray,
    train_config: TrainConfig,
    config: RouterTrainConfig,
    cache_path: str | Path | None = None,
    model_config: ModelConfig | None = None,
) -> RouterTrainResult:
    """
    Fits a fresh router on the frozen draft. `model_config` may change the
    group count or the router activation; the other shapes must match the
    target.
    """
    model_config = model_config or target.config
    if (model_config.vocab_size, model_config.hidden_size) != (
        target.config.vocab_size,
        target.config.hidden_size,
    ):
        raise DimensionError("router shapes must match the target vocabulary and width")
    before = frozen_checksum(draft, target)
    train_tokens, _ = split_corpus(corpus, train_config.holdout_fraction)
    features = cached_router_features(
        cache_path,
        draft,
        target,
        train_tokens,
        train_config,
        config,
        model_config.head_groups,
    )
    records = len(features.hidden)
    cut = records - max(1, int(round(records * config.holdout_fraction)))
    train_idx, heldout_idx = np.arange(cut), np.arange(cut, records)

    router = RouterHead(model_config, seed=config.seed)
    optimizer = AdamW(router.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    rows: list[dict] = []
    step = 0
    for epoch in range(config.epochs):
        with traced_operation("training.router_epoch", epoch=epoch):
            order = rng.permutation(train_idx)
            for start in range(0, len(order), config.batch_size):
                chosen = order[start : start + config.batch_size]
                router.zero_grad()
                logits = router.logits(Tensor(features.hidden[chosen]))
                probs = F.softmax(logits, axis=-1)
                loss = router_loss(features.q_router[chosen], probs)
                loss.backward()
                optimizer.step()
                step += 1
            accuracy = evaluate_router(
                router, features.hidden[heldout_idx], features.q_router[heldout_idx]
            )
        row = {
            "epoch": epoch,
            "step": step,
            "loss_router": loss.item(),
            "accuracy": accuracy,
        }
        rows.append(row)
        logger.info("Router epoch finished", extra=row)

    if frozen_checksum(draft, target) != before:
        raise ContractViolationError(
            "draft or target weights changed during router training"
        )
    return RouterTrainResult(router, rows, rows[-1]["accuracy"] if rows else 0.0)
