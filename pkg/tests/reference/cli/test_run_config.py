# tests/reference/cli/test_run_config.py
from pathlib import Path

import pytest
import toml

from draftlab.cli.config import PathsConfig, RunConfig
from draftlab.engine.config import EngineConfig
from draftlab.models.config import ModelConfig
from draftlab.shared.exceptions import ConfigurationError, DependencyError
from draftlab.shared.models import TrainingMethod
from draftlab.training.config import RouterTrainConfig, TrainConfig

DEFAULT_TOML = Path(__file__).parents[3] / "configs" / "default.toml"


def test_default_file_spells_out_every_default():
    raw = toml.load(DEFAULT_TOML)
    expected = {
        "model": set(ModelConfig().to_dict()) - {"init_seed"},
        "train": set(TrainConfig().to_dict()) - {"seed"},
        "router": set(RouterTrainConfig().to_dict()) - {"seed"},
        "engine": set(EngineConfig().to_dict()) - {"seed", "end_token"},
        "paths": set(PathsConfig.__dataclass_fields__),
    }

    for section, keys in expected.items():
        assert set(raw[section]) == keys, section
    assert RunConfig.load(DEFAULT_TOML).to_dict() == RunConfig().to_dict()


def test_seed_reaches_every_section():
    run = RunConfig(seed=7)

    assert run.model_config().init_seed == 7
    assert run.train_config().seed == 7
    assert run.router_config().seed == 7
    assert run.engine_config().seed == 7


def test_overrides_skip_unset_flags():
    run = RunConfig(engine={"gamma": 5}).with_overrides(
        seed=3, engine={"gamma": None, "temperature": 0.5}
    )

    assert run.seed == 3
    assert run.engine == {"gamma": 5, "temperature": 0.5}
    assert RunConfig(seed=4).with_overrides().seed == 4


def test_method_shapes_the_train_view():
    run = RunConfig(train={"steps": 4})

    assert run.train_config(TrainingMethod.EAGLE).steps == 1
    assert run.train_config(TrainingMethod.HASS).w_csra == 0.0
    assert run.train_config().steps == 4


def test_dump_and_load_agree(tmp_path):
    run = RunConfig(seed=2, model={"head_groups": 8}, engine={"mode": "tree"})
    path = tmp_path / "run_config.toml"

    run.dump(path)
    loaded = RunConfig.load(path)

    assert loaded.to_dict() == run.to_dict()
    assert loaded.engine_config().mode.value == "tree"


@pytest.mark.parametrize(
    "text",
    [
        "[decoder]\ngamma = 2\n",
        "[engine]\ngamma = 0\n",
        "[model]\nwidth = 3\n",
        "[engine\n",
    ],
)
def test_bad_files_are_configuration_errors(tmp_path, text):
    path = tmp_path / "bad.toml"
    path.write_text(text)

    with pytest.raises(ConfigurationError) as excinfo:
        RunConfig.load(path)
    assert excinfo.value.exit_code == 2


def test_missing_file_is_a_dependency_error(tmp_path):
    with pytest.raises(DependencyError):
        RunConfig.load(tmp_path / "missing.toml")
    assert RunConfig.load(None) == RunConfig()
