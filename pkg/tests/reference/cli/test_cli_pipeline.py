# tests/reference/cli/test_cli_pipeline.py
import csv

import pytest
import toml

from draftlab.cli.commands import decode_text, encode_text, read_prompts
from draftlab.cli.main import build_parser, main, run_config_from_args
from draftlab.engine.trace import read_trace
from draftlab.shared.exceptions import DataError, DependencyError


def write_run_config(tmp_path) -> str:
    """A tiny byte-level run: every stage finishes in well under a second."""
    config = {
        "seed": 0,
        "model": {
            "vocab_size": 256,
            "hidden_size": 16,
            "num_layers": 1,
            "num_heads": 2,
            "intermediate_size": 32,
            "max_seq_len": 64,
            "head_groups": 16,
            "router_top_n": 2,
        },
        "train": {
            "steps": 2,
            "batch_size": 2,
            "seq_len": 8,
            "epochs": 1,
            "batches_per_epoch": 2,
            "target_epochs": 1,
            "log_every": 1,
            "warmup_steps": 0,
        },
        "router": {"windows": 4, "epochs": 1, "batch_size": 8},
        "engine": {"gamma": 2, "max_new_tokens": 6},
        "paths": {
            "corpus_length": 3000,
            "weights_dir": str(tmp_path / "weights"),
            "output_dir": str(tmp_path / "out"),
        },
    }
    path = tmp_path / "run.toml"
    path.write_text(toml.dumps(config))
    return str(path)


@pytest.fixture
def run_dir(tmp_path):
    return tmp_path, write_run_config(tmp_path)


def test_flags_override_the_config_file(run_dir):
    _, config = run_dir
    args = build_parser().parse_args(
        [
            "generate",
            "hi",
            "--config",
            config,
            "--top-n",
            "3",
            "--mode",
            "tree",
            "--use-router",
        ]
    )

    run = run_config_from_args(args)

    assert run.model_config().router_top_n == 3
    assert run.engine_config().router_top_n == 3
    assert run.engine_config().use_router is True
    assert run.engine_config().mode.value == "tree"
    assert run.engine_config().gamma == 2


def test_full_pipeline(run_dir, capsys):
    tmp_path, config = run_dir
    prompts = tmp_path / "prompts.txt"
    prompts.write_text("abc\nhello world\n")

    assert main(["train-target", "--config", config]) == 0
    assert main(["train-draft", "--config", config, "--method", "csra"]) == 0
    assert main(["train-router", "--config", config]) == 0
    capsys.readouterr()
    assert main(["generate", "hello", "--config", config, "--use-router"]) == 0
    text = capsys.readouterr().out
    assert main(["bench", str(prompts), "--config", config, "--label", "tiny"]) == 0
    assert main(["diag-infonce", "--config", config]) == 0

    weights, out = tmp_path / "weights", tmp_path / "out"
    for name in ("target.bin", "draft.bin", "router.bin", "run_config.toml"):
        assert (weights / name).is_file()
    with (weights / "draft_log.csv").open() as handle:
        assert next(csv.reader(handle))[:3] == ["epoch", "step", "loss_total"]
    trace = read_trace(out / "trace.jsonl")
    assert sum(len(row["emitted_tokens"]) for row in trace) >= 6
    assert text.endswith("\n")
    assert (out / "metrics.json").is_file()
    assert (out / "runs.csv").read_text().splitlines()[1].startswith("tiny,")
    assert (out / "infonce.csv").read_text().splitlines()[0] == "step,0,1"


def test_rerunning_the_pipeline_reproduces_every_artifact(tmp_path):
    stages = [
        ["train-target"],
        ["train-draft", "--method", "csra"],
        ["train-router"],
        ["generate", "hello", "--use-router"],
    ]
    roots = [tmp_path / "first", tmp_path / "second"]
    for root in roots:
        root.mkdir()
        config = write_run_config(root)
        for argv in stages:
            assert main([*argv, "--config", config]) == 0

    first, second = roots
    artifacts = sorted(p.name for p in (first / "weights").iterdir())
    assert {"target.bin", "draft.bin", "router.bin"} <= set(artifacts)
    assert artifacts == sorted(p.name for p in (second / "weights").iterdir())
    for name in artifacts:
        if name.endswith((".bin", ".csv")):
            left = (first / "weights" / name).read_bytes()
            assert left == (second / "weights" / name).read_bytes(), name

    def untimed(root):
        rows = read_trace(root / "out" / "trace.jsonl")
        return [
            {k: v for k, v in row.items() if k not in ("draft_ms", "verify_ms")}
            for row in rows
        ]

    assert untimed(first) == untimed(second)
    assert untimed(first)


def test_zero_new_tokens_needs_no_weights(run_dir, capsys):
    tmp_path, config = run_dir

    code = main(["generate", "hello", "--config", config, "--max-new-tokens", "0"])

    assert code == 0
    assert capsys.readouterr().out == "\n"
    assert read_trace(tmp_path / "out" / "trace.jsonl") == []


@pytest.mark.parametrize(
    "argv, code",
    [
        (["train-draft"], 3),
        (["generate", "hi"], 3),
        (["train-target", "--gamma", "0"], 2),
        (["diag-infonce", "--steps", "1"], 2),
    ],
)
def test_failures_map_to_exit_codes(run_dir, argv, code):
    _, config = run_dir

    assert main([*argv, "--config", config]) == code


def test_missing_config_file_is_a_dependency_failure(tmp_path):
    assert main(["train-target", "--config", str(tmp_path / "none.toml")]) == 3


def test_byte_text_helpers(tmp_path):
    assert encode_text("hé") == [104, 195, 169]
    assert decode_text([104, 195, 169]) == "hé"
    assert decode_text([104, 300]) == "h�"

    path = tmp_path / "prompts.txt"
    path.write_text("one\n\ntwo\n")
    assert read_prompts(path) == [encode_text("one"), encode_text("two")]
    path.write_text("\n")
    with pytest.raises(DataError):
        read_prompts(path)
    with pytest.raises(DependencyError):
        read_prompts(tmp_path / "missing.txt")
