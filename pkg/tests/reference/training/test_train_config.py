# tests/reference/training/test_train_config.py
import pytest

from draftlab.shared.exceptions import ConfigurationError
from draftlab.shared.models import TrainingMethod
from draftlab.training.config import RouterTrainConfig, TrainConfig


def test_eagle_forces_a_single_step_without_alignment():
    config = TrainConfig.for_method({"steps": 4}, TrainingMethod.EAGLE)

    assert config.steps == 1
    assert config.w_csra == 0.0


def test_hass_keeps_steps_and_drops_alignment():
    config = TrainConfig.for_method({"steps": 4}, TrainingMethod.HASS)

    assert config.steps == 4
    assert config.w_csra == 0.0


def test_csra_keeps_the_configured_weights():
    config = TrainConfig.for_method({}, TrainingMethod.CSRA)

    assert config == TrainConfig()


@pytest.mark.parametrize(
    "values, method",
    [
        ({"steps": 1}, TrainingMethod.CSRA),
        ({"w_csra": 0.0}, TrainingMethod.CSRA),
        ({"steps": 1, "w_csra": 0.0}, TrainingMethod.HASS),
    ],
)
def test_method_requirements_are_enforced(values, method):
    with pytest.raises(ConfigurationError):
        TrainConfig.for_method(values, method)


@pytest.mark.parametrize(
    "values",
    [
        {"w_reg": -1.0},
        {"csra_temperature": 0.0},
        {"steps": 8, "seq_len": 8},
        {"holdout_fraction": 1.0},
        {"batch_size": 0},
    ],
)
def test_invalid_train_settings_are_rejected(values):
    with pytest.raises(ConfigurationError):
        TrainConfig(**values)


def test_invalid_router_settings_are_rejected():
    with pytest.raises(ConfigurationError):
        RouterTrainConfig(windows=0)
    with pytest.raises(ConfigurationError):
        RouterTrainConfig(holdout_fraction=0.0)
