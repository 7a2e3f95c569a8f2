# src/draftlab/cli/commands.py
"""
The pipeline stages behind the subcommands:

    train-target -> train-draft -> train-router -> generate | bench | diag-infonce

Each stage reads its prerequisites from the weights directory of the run
configuration and writes its artifacts next to them, together with the
effective configuration.
"""

import dataclasses
import logging
from pathlib import Path
from typing import NamedTuple

import numpy as np

from draftlab.analytics.bench import measured_speedup
from draftlab.analytics.infonce import cross_step_infonce
from draftlab.analytics.report import write_infonce_csv, write_metrics_report
from draftlab.cli.config import RunConfig
from draftlab.engine.drafters import EagleDrafter
from draftlab.engine.generation import generate
from draftlab.engine.trace import write_trace
from draftlab.models.draft import DraftModel
from draftlab.models.router import RouterHead
from draftlab.models.serialization import (
    load_draft,
    load_router,
    load_target,
    save_draft,
    save_router,
    save_target,
)
from draftlab.models.target import TargetModel
from draftlab.shared.exceptions import DataError, DependencyError, ParameterError
from draftlab.shared.models import TrainingMethod
from draftlab.training.batches import make_batch
from draftlab.training.corpus import (
    markov_corpus,
    read_corpus,
    sample_windows,
    split_corpus,
)
from draftlab.training.draft_trainer import train_draft
from draftlab.training.logs import (
    DRAFT_LOG_COLUMNS,
    ROUTER_LOG_COLUMNS,
    TARGET_LOG_COLUMNS,
    write_log_csv,
)
from draftlab.training.pretrain import pretrain_target
from draftlab.training.router_trainer import train_router

logger = logging.getLogger(__name__)

CONFIG_FILE = "run_config.toml"
TRACE_FILE = "trace.jsonl"
INFONCE_FILE = "infonce.csv"
INFONCE_BATCHES = 4
ROUTER_MODEL_KEYS = ("head_groups", "router_top_n", "router_activation")


class GenerateOutcome(NamedTuple):
    text: str
    tokens: list[int]
    trace_path: Path


# --- Inputs ---


def load_corpus(run: RunConfig) -> np.ndarray:
    """The corpus file named in [paths], or the seeded Markov corpus when none is."""
    paths = run.paths_config()
    if paths.corpus:
        return read_corpus(paths.corpus)
    return markov_corpus(paths.corpus_length, seed=run.seed)


def encode_text(text: str) -> list[int]:
    return list(text.encode("utf-8"))


def decode_text(tokens: list[int]) -> str:
    """Byte tokens back to text; ids outside the byte range become U+FFFD."""
    pieces = []
    for token in tokens:
        pieces.append(bytes([token]) if token < 256 else "�".encode())
    return b"".join(pieces).decode("utf-8", errors="replace")


def read_prompts(path: str | Path) -> list[list[int]]:
    """One prompt per non-empty line of a UTF-8 file."""
    path = Path(path)
    if not path.is_file():
        raise DependencyError("prompts", str(path))
    lines = path.read_text("utf-8").splitlines()
    prompts = [encode_text(line) for line in lines if line]
    if not prompts:
        raise DataError(f"prompt file {path} holds no prompts")
    return prompts


def load_models(run: RunConfig) -> tuple[TargetModel, DraftModel, RouterHead | None]:
    paths = run.paths_config()
    target = load_target(paths.target_weights)
    draft = load_draft(paths.draft_weights, target)
    router = None
    if run.engine_config().use_router:
        router = load_router(paths.router_weights)
    return target, draft, router


def _save_config(run: RunConfig, directory: str | Path) -> None:
    run.dump(Path(directory) / CONFIG_FILE)


# --- Training stages ---


def cmd_train_target(run: RunConfig) -> Path:
    paths = run.paths_config()
    weights = Path(paths.weights_dir)
    result = pretrain_target(
        load_corpus(run), run.model_config(), run.train_config(), dump_dir=weights
    )
    save_target(result.model, paths.target_weights)
    write_log_csv(weights / "target_log.csv", TARGET_LOG_COLUMNS, result.log_rows)
    _save_config(run, weights)
    logger.info(
        "Target weights written",
        extra={"path": str(paths.target_weights), "heldout_ce": result.heldout_ce},
    )
    return paths.target_weights


def cmd_train_draft(run: RunConfig, method: TrainingMethod) -> Path:
    paths = run.paths_config()
    weights = Path(paths.weights_dir)
    config = run.train_config(method)
    target = load_target(paths.target_weights)
    result = train_draft(target, load_corpus(run), config, method, dump_dir=weights)
    save_draft(result.draft, paths.draft_weights)
    write_log_csv(weights / "draft_log.csv", DRAFT_LOG_COLUMNS, result.log_rows)
    _save_config(run.with_overrides(train=config.to_dict()), weights)
    logger.info(
        "Draft weights written",
        extra={"path": str(paths.draft_weights), "method": method.value},
    )
    return paths.draft_weights


def cmd_train_router(run: RunConfig) -> Path:
    paths = run.paths_config()
    weights = Path(paths.weights_dir)
    target = load_target(paths.target_weights)
    draft = load_draft(paths.draft_weights, target)
    overrides = {key: run.model[key] for key in ROUTER_MODEL_KEYS if key in run.model}
    result = train_router(
        draft,
        target,
        load_corpus(run),
        run.train_config(),
        run.router_config(),
        cache_path=paths.router_features,
        model_config=dataclasses.replace(target.config, **overrides),
    )
    save_router(result.router, paths.router_weights)
    write_log_csv(weights / "router_log.csv", ROUTER_LOG_COLUMNS, result.log_rows)
    _save_config(run, weights)
    logger.info(
        "Router weights written",
        extra={"path": str(paths.router_weights), "accuracy": result.heldout_accuracy},
    )
    return paths.router_weights


# --- Decoding stages ---


def cmd_generate(run: RunConfig, prompt: str) -> GenerateOutcome:
    config = run.engine_config()
    out_dir = Path(run.paths_config().output_dir)
    trace_path = out_dir / TRACE_FILE
    if config.max_new_tokens == 0:
        write_trace(trace_path, [])
        return GenerateOutcome("", [], trace_path)
    target, draft, router = load_models(run)
    result = generate(encode_text(prompt), target, EagleDrafter(draft), config, router)
    write_trace(trace_path, result.records)
    _save_config(run, out_dir)
    logger.info(
        "Generation finished",
        extra={"tokens": len(result.tokens), "cycles": len(result.records)},
    )
    return GenerateOutcome(decode_text(result.tokens), result.tokens, trace_path)


def cmd_bench(run: RunConfig, prompt_file: str | Path, label: str = "run") -> Path:
    config = run.engine_config()
    out_dir = Path(run.paths_config().output_dir)
    prompts = read_prompts(prompt_file)
    target, draft, router = load_models(run)
    result = measured_speedup(prompts, target, EagleDrafter(draft), config, router)
    if config.greedy and not result.outputs_match:
        logger.warning("Greedy speculative output differs from vanilla decoding")
    _save_config(run, out_dir)
    return write_metrics_report(result.metrics, out_dir, label)


def cmd_diag_infonce(run: RunConfig, batches: int = INFONCE_BATCHES) -> Path:
    """Cross-step InfoNCE of the trained draft on held-out windows of the corpus."""
    config = run.train_config()
    if config.steps < 2:
        raise ParameterError("diag-infonce needs --steps >= 2")
    paths = run.paths_config()
    target = load_target(paths.target_weights)
    draft = load_draft(paths.draft_weights, target)
    _, heldout = split_corpus(load_corpus(run), config.holdout_fraction)
    rng = np.random.default_rng(run.seed)
    evaluation = [
        make_batch(
            target, sample_windows(heldout, config.batch_size, config.seq_len, rng)
        )
        for _ in range(batches)
    ]
    matrix = cross_step_infonce(
        draft, evaluation, config.steps, config.csra_temperature
    )
    out_path = Path(paths.output_dir) / INFONCE_FILE
    write_infonce_csv(matrix, out_path)
    logger.info(
        "InfoNCE matrix written",
        extra={"path": str(out_path), "steps": config.steps},
    )
    return out_path
