# tests/reference/tensor/test_in_memory_gradients.py
import numpy as np
import pytest

from draftlab.contracts.gradients import BaseTestGradientContract
from draftlab.models.config import ModelConfig
from draftlab.models.router import RouterHead
from draftlab.tensor import Tensor
from draftlab.tensor import functional as F
from draftlab.training.losses import csra_loss, router_loss

# =============================================================================
# 1. LOSS CASES
# =============================================================================


def smooth_l1_case(rng):
    pred = Tensor(rng.normal(size=(3, 5)), requires_grad=True)
    target = Tensor(rng.normal(size=(3, 5)), requires_grad=True)
    return (lambda: F.smooth_l1(pred, target, beta=1.0)), [pred, target]


def cross_entropy_case(rng):
    logits = Tensor(rng.normal(size=(4, 6)), requires_grad=True)
    soft = rng.dirichlet(np.ones(6), size=4)
    return (
        lambda: F.cross_entropy(F.log_softmax(logits, axis=-1), Tensor(soft))
    ), [logits]


def csra_case(rng):
    steps = [Tensor(rng.normal(size=(1, 3, 8)), requires_grad=True) for _ in range(2)]
    targets = Tensor(rng.normal(size=(1, 3, 8)), requires_grad=True)
    return (lambda: csra_loss(steps, targets, temperature=0.07)), [*steps, targets]


def router_case(rng):
    config = ModelConfig(
        vocab_size=8,
        hidden_size=4,
        num_layers=1,
        num_heads=2,
        intermediate_size=8,
        head_groups=4,
        router_top_n=2,
        init_seed=int(rng.integers(0, 1000)),
    )
    router = RouterHead(config)
    router.w1.data += rng.normal(scale=0.5, size=router.w1.shape)
    router.w2.data += rng.normal(scale=0.5, size=router.w2.shape)
    hidden = Tensor(rng.normal(size=(5, 4)))
    q_router = rng.dirichlet(np.ones(4), size=5)
    return (
        lambda: router_loss(q_router, F.softmax(router.logits(hidden), axis=-1))
    ), [router.w1, router.w2]


def attention_case(rng):
    """A normalized softmax-attention chain over a shared projection."""
    x = Tensor(rng.normal(size=(4, 6)), requires_grad=True)
    gain = Tensor(rng.normal(loc=1.0, scale=0.1, size=6), requires_grad=True)
    w = Tensor(rng.normal(scale=0.3, size=(6, 6)), requires_grad=True)

    def loss():
        h = F.rms_norm(x, gain)
        scores = F.softmax((h @ w) @ h.transpose(1, 0), axis=-1)
        return F.silu(scores @ h).sum()

    return loss, [x, gain, w]


# =============================================================================
# 2. CONTRACT COMPLIANCE TESTS
# =============================================================================


class TestSmoothL1Gradients(BaseTestGradientContract):
    @pytest.fixture
    def loss_case(self):
        return smooth_l1_case


class TestCrossEntropyGradients(BaseTestGradientContract):
    @pytest.fixture
    def loss_case(self):
        return cross_entropy_case


class TestCsraGradients(BaseTestGradientContract):
    @pytest.fixture
    def loss_case(self):
        return csra_case


class TestRouterLossGradients(BaseTestGradientContract):
    @pytest.fixture
    def loss_case(self):
        return router_case


class TestAttentionChainGradients(BaseTestGradientContract):
    @pytest.fixture
    def loss_case(self):
        return attention_case
