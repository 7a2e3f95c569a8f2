# src/draftlab/contracts/gradients.py
from collections.abc import Callable, Sequence

import numpy as np
import pytest

from draftlab.tensor import Tensor
from draftlab.tensor.gradcheck import gradient_errors

LossCase = tuple[Callable[[], Tensor], Sequence[Tensor]]

SEEDS = range(20)
TOLERANCE = 1e-4
EPS = 1e-5


class BaseTestGradientContract:
    """
    Contract: a differentiable loss must agree with central finite
    differences. The inheriting class provides the loss through the
    `loss_case` fixture.
    """

    @pytest.fixture
    def loss_case(self) -> Callable[[np.random.Generator], LossCase]:
        """
        This fixture MUST be implemented by the inheriting test class.
        It returns a function that, given a seeded generator, builds fresh
        leaf tensors (requires_grad=True) and returns a zero-argument loss
        function together with the leaves to check.
        """
        raise NotImplementedError(
            "To use the contract, you must implement the 'loss_case' fixture."
        )

    # --- Start of Contract Tests ---

    @pytest.mark.parametrize("seed", SEEDS)
    def test_backward_matches_finite_differences(self, loss_case, seed):
        loss_fn, params = loss_case(np.random.default_rng(seed))

        errors = gradient_errors(loss_fn, params, EPS)

        assert max(errors) < TOLERANCE, f"relative errors {errors}"

    def test_loss_is_scalar_float64(self, loss_case):
        loss_fn, _ = loss_case(np.random.default_rng(0))

        loss = loss_fn()

        assert loss.data.size == 1
        assert loss.data.dtype == np.float64

    def test_backward_reaches_every_leaf(self, loss_case):
        loss_fn, params = loss_case(np.random.default_rng(1))
        for p in params:
            p.zero_grad()

        loss_fn().backward()

        for p in params:
            assert p.grad is not None
            assert p.grad.shape == p.shape

    def test_backward_accumulates(self, loss_case):
        loss_fn, params = loss_case(np.random.default_rng(2))
        for p in params:
            p.zero_grad()
        loss_fn().backward()
        once = [p.grad.copy() for p in params]

        loss_fn().backward()

        for p, first in zip(params, once, strict=True):
            np.testing.assert_allclose(p.grad, 2 * first, rtol=1e-12, atol=1e-15)
