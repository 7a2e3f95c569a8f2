# tests/reference/training/test_losses.py
import math

import numpy as np
import pytest

from draftlab.shared.exceptions import DistributionError, ParameterError
from draftlab.tensor import Tensor
from draftlab.training.batches import make_batch
from draftlab.training.config import TrainConfig
from draftlab.training.losses import csra_loss, draft_loss, router_loss, router_target
from draftlab.training.rollout import multi_step_rollout

# ===== 1. Cross-step alignment =====


def test_orthogonal_places_with_agreeing_steps_cost_almost_nothing():
    places = np.eye(4)[None, :3]
    steps = [Tensor(places.copy()) for _ in range(2)]

    loss = csra_loss(steps, Tensor(places.copy()), temperature=0.07)

    assert loss.item() < 1e-5


def test_identical_features_everywhere_cost_log_of_the_denominator():
    same = np.ones((1, 3, 4))
    steps = [Tensor(same.copy()) for _ in range(2)]

    loss = csra_loss(steps, Tensor(same.copy()), temperature=0.07)

    # one positive plus 3 views x 2 other places
    assert loss.item() == pytest.approx(math.log(7), rel=1e-9)


def test_alignment_without_the_target_positive_still_needs_two_steps():
    rng = np.random.default_rng(0)
    feats = [Tensor(rng.normal(size=(2, 3, 4))) for _ in range(2)]

    with_target = csra_loss(feats, Tensor(rng.normal(size=(2, 3, 4))))
    without = csra_loss(feats, Tensor(feats[0].data), target_positive=False)

    assert with_target.item() > 0 and without.item() > 0
    with pytest.raises(ParameterError):
        csra_loss(feats[:1], Tensor(feats[0].data))
    with pytest.raises(ParameterError):
        csra_loss(feats, Tensor(feats[0].data), temperature=0.0)


def test_scaling_one_feature_leaves_the_alignment_loss_unchanged():
    rng = np.random.default_rng(4)
    feats = [rng.normal(size=(2, 3, 4)) for _ in range(3)]
    target = rng.normal(size=(2, 3, 4))
    scaled = [f.copy() for f in feats]
    scaled[1][0, 2] *= 7.0

    before = csra_loss([Tensor(f) for f in feats], Tensor(target))
    after = csra_loss([Tensor(f) for f in scaled], Tensor(target))

    assert abs(after.item() - before.item()) < 1e-10


# ===== 2. Router objective =====


def test_router_target_sums_contiguous_groups():
    q = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(router_target(q, 2), [0.3, 0.7])
    np.testing.assert_allclose(router_target(np.full(4, 0.25), 4), np.full(4, 0.25))


@pytest.mark.parametrize(
    "q",
    [
        np.array([0.5, 0.6, -0.1]),
        np.array([0.2, 0.2, 0.2]),
        np.array([np.nan, 1.0, 0.0]),
    ],
)
def test_router_target_rejects_invalid_distributions(q):
    with pytest.raises(DistributionError):
        router_target(q, 3)


def test_router_target_rejects_uneven_groups():
    with pytest.raises(DistributionError):
        router_target(np.full(6, 1 / 6), 4)


def test_router_loss_of_the_target_law_is_its_entropy():
    q = np.array([[0.3, 0.7]])

    assert router_loss(q, Tensor(q)).item() == pytest.approx(0.6109, abs=1e-4)


def test_router_loss_floors_zero_probabilities():
    loss = router_loss(np.array([[1.0, 0.0]]), Tensor([[0.0, 1.0]]), floor=1e-12)

    assert loss.item() == pytest.approx(-math.log(1e-12))


# ===== 3. Combined draft loss =====


def _batch(build_models):
    target, draft, _ = build_models()
    tokens = np.random.default_rng(1).integers(0, 16, size=(2, 6))
    return make_batch(target, tokens), draft


def test_draft_loss_components_are_non_negative(build_models):
    batch, draft = _batch(build_models)
    config = TrainConfig(steps=2, seq_len=6)

    total, breakdown = draft_loss(
        batch, multi_step_rollout(batch, draft, 2), draft.lm_head, config
    )

    assert min(breakdown.regression, breakdown.classification, breakdown.csra) >= 0
    expected = (
        config.w_reg * breakdown.regression
        + config.w_cls * breakdown.classification
        + config.w_csra * breakdown.csra
    )
    assert total.item() == pytest.approx(expected)


def test_alignment_term_only_adds_to_the_step_losses(build_models):
    batch, draft = _batch(build_models)
    rollout = multi_step_rollout(batch, draft, 2)

    _, with_alignment = draft_loss(batch, rollout, draft.lm_head, TrainConfig(steps=2))
    _, without = draft_loss(
        batch, rollout, draft.lm_head, TrainConfig(steps=2, w_csra=0.0)
    )

    assert with_alignment.regression == pytest.approx(without.regression)
    assert with_alignment.classification == pytest.approx(without.classification)
    assert without.csra == 0.0 and with_alignment.csra > 0.0
