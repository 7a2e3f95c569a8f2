# src/draftlab/contracts/grouped_head.py
import numpy as np
import pytest

VOCAB, HIDDEN, GROUPS = 16, 8, 4
TRIALS = 100


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def _group_sums(probs: np.ndarray) -> np.ndarray:
    return probs.reshape(GROUPS, -1).sum(axis=-1)


class BaseTestGroupedHeadContract:
    """
    Contract for grouped LM heads: p(x) = p_router(n) * p_group(x | n) over
    contiguous, equally sized groups. With the true group marginals as the
    router law the factorization must give back the full softmax.
    """

    @pytest.fixture
    def grouped_head_fn(self):
        """
        This fixture MUST be implemented by the inheriting test class.
        It returns a function (hidden, lm_head, p_router, active_groups,
        temperature) -> distribution exposing `probs` [V], `active_groups`
        and `active_mass`.
        """
        raise NotImplementedError(
            "To use the contract, you must implement the 'grouped_head_fn' fixture."
        )

    @pytest.fixture
    def lm_head(self) -> np.ndarray:
        return np.random.default_rng(3).normal(size=(HIDDEN, VOCAB))

    # --- Start of Contract Tests ---

    def test_oracle_marginals_reproduce_the_full_softmax(
        self, grouped_head_fn, lm_head
    ):
        rng = np.random.default_rng(5)
        for _ in range(TRIALS):
            hidden = rng.normal(size=HIDDEN)
            full = _softmax(hidden @ lm_head)
            marginals = _group_sums(full)

            dist = grouped_head_fn(hidden, lm_head, marginals, range(GROUPS), 1.0)

            np.testing.assert_allclose(dist.probs, full, rtol=0, atol=1e-10)

    def test_all_groups_active_is_normalized(self, grouped_head_fn, lm_head):
        rng = np.random.default_rng(4)
        for _ in range(20):
            p_router = rng.dirichlet(np.ones(GROUPS))

            dist = grouped_head_fn(
                rng.normal(size=HIDDEN), lm_head, p_router, range(GROUPS), 1.0
            )

            assert dist.probs.sum() == pytest.approx(1.0, abs=1e-10)
            assert dist.active_mass == pytest.approx(1.0, abs=1e-12)

    def test_single_group_is_the_full_softmax(self, grouped_head_fn, lm_head):
        hidden = np.random.default_rng(6).normal(size=HIDDEN)

        dist = grouped_head_fn(hidden, lm_head, np.array([1.0]), [0], 1.0)

        np.testing.assert_allclose(
            dist.probs, _softmax(hidden @ lm_head), rtol=0, atol=1e-15
        )

    def test_partial_activation_keeps_the_router_mass(self, grouped_head_fn, lm_head):
        hidden = np.random.default_rng(7).normal(size=HIDDEN)
        p_router = np.array([0.1, 0.4, 0.2, 0.3])

        dist = grouped_head_fn(hidden, lm_head, p_router, [3, 1], 1.0)

        assert tuple(dist.active_groups) == (1, 3)
        assert dist.active_mass == pytest.approx(0.7)
        assert dist.probs.sum() == pytest.approx(0.7)
        assert np.all(dist.probs[0:4] == 0) and np.all(dist.probs[8:12] == 0)

    def test_temperature_only_reshapes_within_groups(self, grouped_head_fn, lm_head):
        hidden = np.random.default_rng(8).normal(size=HIDDEN)
        p_router = np.array([0.1, 0.4, 0.2, 0.3])

        cold = grouped_head_fn(hidden, lm_head, p_router, range(GROUPS), 0.5)
        warm = grouped_head_fn(hidden, lm_head, p_router, range(GROUPS), 2.0)

        np.testing.assert_allclose(_group_sums(cold.probs), p_router)
        np.testing.assert_allclose(_group_sums(warm.probs), p_router)
        assert not np.allclose(cold.probs, warm.probs)
