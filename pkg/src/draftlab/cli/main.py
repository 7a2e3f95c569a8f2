# src/draftlab/cli/main.py
"""Command-line entry point: `draftlab <command> [flags]`."""

import argparse
import logging
import sys
from collections.abc import Sequence

from draftlab.cli import commands
from draftlab.cli.config import RunConfig
from draftlab.observability.logging import configure_logging
from draftlab.observability.tracing import traced_operation
from draftlab.shared.exceptions import DraftLabError
from draftlab.shared.models import DecodeMode, TrainingMethod

logger = logging.getLogger(__name__)

COMMANDS = (
    "train-target",
    "train-draft",
    "train-router",
    "generate",
    "bench",
    "diag-infonce",
)


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="TOML run configuration")
    shared.add_argument("--seed", type=int, help="run-level seed")
    shared.add_argument("--log-level", default="INFO")
    shared.add_argument("--steps", type=int, help="rollout steps of draft training")
    shared.add_argument("--groups", type=int, help="LM-head vocabulary groups")
    shared.add_argument("--top-n", type=int, help="active groups per draft step")
    shared.add_argument("--mode", choices=[m.value for m in DecodeMode])
    shared.add_argument("--gamma", type=int, help="chain draft length")
    shared.add_argument("--tree-depth", type=int)
    shared.add_argument("--tree-budget", type=int, help="draft tokens per tree")
    shared.add_argument("--temperature", type=float)
    shared.add_argument("--use-router", action="store_true", default=None)
    shared.add_argument("--max-new-tokens", type=int)

    parser = argparse.ArgumentParser(
        prog="draftlab",
        description="Train and benchmark feature-level speculative drafters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train-target", parents=[shared], help="pretrain the target model")
    draft = sub.add_parser(
        "train-draft", parents=[shared], help="train the draft model"
    )
    draft.add_argument(
        "--method",
        choices=[m.value for m in TrainingMethod],
        default=TrainingMethod.CSRA.value,
    )
    sub.add_parser("train-router", parents=[shared], help="train the LM-head router")
    generate = sub.add_parser("generate", parents=[shared], help="decode one prompt")
    generate.add_argument("prompt")
    bench = sub.add_parser(
        "bench", parents=[shared], help="vanilla vs speculative benchmark"
    )
    bench.add_argument("prompts", help="file with one prompt per line")
    bench.add_argument("--label", default="run")
    sub.add_parser("diag-infonce", parents=[shared], help="cross-step InfoNCE matrix")
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """Loads --config and lays the flags that were given over it."""
    return RunConfig.load(args.config).with_overrides(
        seed=args.seed,
        train={"steps": args.steps},
        model={"head_groups": args.groups, "router_top_n": args.top_n},
        engine={
            "mode": args.mode,
            "gamma": args.gamma,
            "tree_depth": args.tree_depth,
            "tree_budget": args.tree_budget,
            "temperature": args.temperature,
            "use_router": args.use_router,
            "router_top_n": args.top_n,
            "max_new_tokens": args.max_new_tokens,
        },
    )


def dispatch(args: argparse.Namespace, run: RunConfig) -> None:
    if args.command == "train-target":
        commands.cmd_train_target(run)
    elif args.command == "train-draft":
        commands.cmd_train_draft(run, TrainingMethod(args.method))
    elif args.command == "train-router":
        commands.cmd_train_router(run)
    elif args.command == "generate":
        print(commands.cmd_generate(run, args.prompt).text)
    elif args.command == "bench":
        print(commands.cmd_bench(run, args.prompts, args.label))
    elif args.command == "diag-infonce":
        print(commands.cmd_diag_infonce(run))


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level.upper())
    try:
        with traced_operation(f"cli.{args.command}"):
            dispatch(args, run_config_from_args(args))
    except DraftLabError as e:
        logger.error(
            "Command failed",
            extra={
                "command": args.command,
                "error": type(e).__name__,
                "detail": str(e),
                "exit_code": e.exit_code,
            },
        )
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
