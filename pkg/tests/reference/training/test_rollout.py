# tests/reference/training/test_rollout.py
import numpy as np
import pytest

from draftlab.shared.exceptions import ParameterError
from draftlab.tensor.functional import MASKED
from draftlab.training.batches import make_batch
from draftlab.training.rollout import multi_step_rollout, rollout_bias

TOKENS = np.array([[5, 3, 9, 1, 12, 7]])


def test_first_step_mask_is_causal():
    bias = rollout_bias(4, 1)

    np.testing.assert_array_equal(bias == 0.0, np.tril(np.ones((4, 4), dtype=bool)))


def test_second_step_reads_its_own_key_and_earlier_first_step_keys():
    visible = rollout_bias(3, 2) == 0.0

    # columns 0..2 are step-1 keys, 3..5 step-2 keys
    expected = np.array(
        [
            [False, False, False, True, False, False],
            [True, False, False, False, True, False],
            [True, True, False, False, False, True],
        ]
    )
    np.testing.assert_array_equal(visible, expected)
    assert rollout_bias(3, 2).min() == MASKED


def test_every_query_sees_exactly_one_key_per_earlier_position():
    bias = rollout_bias(5, 3)

    for i in range(5):
        seen = np.flatnonzero(bias[i] == 0.0) % 5
        assert sorted(seen) == list(range(i + 1))


def test_single_step_rollout_drafts_from_target_features(build_models):
    target, draft, _ = build_models()
    batch = make_batch(target, TOKENS)

    rollout = multi_step_rollout(batch, draft, 1)
    reference = draft.extend(
        batch.target_features[0, :-1], TOKENS[0, 1:].tolist(), draft.new_cache()
    )

    assert rollout.steps == 1
    np.testing.assert_allclose(rollout.features[0].data[0], reference, atol=1e-10)


def test_second_step_matches_inference_on_its_own_predictions(build_models):
    target, draft, _ = build_models()
    batch = make_batch(target, TOKENS)
    rollout = multi_step_rollout(batch, draft, 2)
    first, second = (f.data[0] for f in rollout.features)
    tokens = TOKENS[0, 1:].tolist()

    np.testing.assert_allclose(second[0], first[0], atol=1e-10)
    for i in range(1, len(tokens)):
        cache = draft.new_cache()
        draft.extend(batch.target_features[0, :i], tokens[:i], cache)
        step = draft.draft_forward(first[i - 1], tokens[i], cache)
        np.testing.assert_allclose(second[i], step.feature, atol=1e-10)


def test_rollout_steps_must_fit_the_window(build_models):
    target, draft, _ = build_models()
    batch = make_batch(target, TOKENS)

    with pytest.raises(ParameterError):
        multi_step_rollout(batch, draft, TOKENS.shape[1] + 1)
    with pytest.raises(ParameterError):
        multi_step_rollout(batch, draft, 0)
