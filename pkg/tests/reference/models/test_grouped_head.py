# tests/reference/models/test_grouped_head.py
import numpy as np
import pytest

from draftlab.contracts.grouped_head import BaseTestGroupedHeadContract
from draftlab.models.config import ModelConfig
from draftlab.models.router import RouterHead, grouped_head_prob, top_groups
from draftlab.shared.exceptions import ParameterError
from draftlab.tensor import Tensor
from draftlab.tensor import functional as F

HIDDEN, GROUPS = 8, 4


class TestGroupedHeadProb(BaseTestGroupedHeadContract):
    @pytest.fixture
    def grouped_head_fn(self):
        return grouped_head_prob


def test_renormalized_law_sums_to_one():
    lm_head = np.random.default_rng(3).normal(size=(HIDDEN, 16))
    p_router = np.array([0.1, 0.4, 0.2, 0.3])

    dist = grouped_head_prob(np.ones(HIDDEN), lm_head, p_router, [1, 3])

    assert dist.renormalized().sum() == pytest.approx(1.0)


def test_top_groups_prefers_lowest_id_on_ties():
    assert top_groups(np.array([0.3, 0.3, 0.1, 0.3]), 2) == (0, 1)
    assert top_groups(np.array([0.1, 0.2, 0.3, 0.4]), 4) == (0, 1, 2, 3)


@pytest.mark.parametrize(
    "active, temperature",
    [([], 1.0), ([4], 1.0), ([-1], 1.0), ([0], 0.0)],
)
def test_invalid_activation_is_rejected(active, temperature):
    lm_head = np.ones((HIDDEN, 16))

    with pytest.raises(ParameterError):
        grouped_head_prob(
            np.ones(HIDDEN), lm_head, np.full(GROUPS, 0.25), active, temperature
        )


def test_top_n_outside_the_group_range_is_rejected():
    with pytest.raises(ParameterError):
        top_groups(np.full(4, 0.25), 5)


# ===== Router head =====


def test_zero_router_weights_give_a_uniform_group_law(tiny_config):
    router = RouterHead(tiny_config)
    router.w1.data[...] = 0.0
    router.w2.data[...] = 0.0

    probs = router.router_forward(np.random.default_rng(0).normal(size=(3, 16)))

    np.testing.assert_allclose(probs, np.full((3, tiny_config.head_groups), 0.25))


def test_router_log_probs_are_normalized(tiny_config):
    router = RouterHead(tiny_config, seed=9)
    hidden = Tensor(np.random.default_rng(9).normal(size=(5, 16)))

    log_probs = router.log_probs(hidden).data

    np.testing.assert_allclose(np.exp(log_probs).sum(axis=-1), np.ones(5))
    np.testing.assert_allclose(
        F.softmax(router.logits(hidden), axis=-1).data, np.exp(log_probs), atol=1e-12
    )


def test_router_activation_is_configurable(tiny_config):
    relu = ModelConfig(**{**tiny_config.to_dict(), "router_activation": "relu"})
    hidden = np.random.default_rng(10).normal(size=(2, 16))

    silu_probs = RouterHead(tiny_config, seed=1).router_forward(hidden)
    relu_probs = RouterHead(relu, seed=1).router_forward(hidden)

    assert not np.allclose(silu_probs, relu_probs)


def test_router_accepts_one_hidden_state_or_a_batch(tiny_config):
    router = RouterHead(tiny_config, seed=2)
    hidden = np.random.default_rng(11).normal(size=(3, 16))

    single = router.router_forward(hidden[1])

    assert single.shape == (tiny_config.head_groups,)
    np.testing.assert_allclose(single, router.router_forward(hidden)[1])
    assert single.sum() == pytest.approx(1.0)
