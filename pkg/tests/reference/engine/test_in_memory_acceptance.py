# tests/reference/engine/test_in_memory_acceptance.py
import numpy as np
import pytest
from scipy import stats

from draftlab.contracts.lossless import BaseTestLosslessAcceptanceContract
from draftlab.engine.sampler import NumpySampler
from draftlab.engine.tree import ROOT, DraftTree
from draftlab.engine.verification import accept_sampling
from draftlab.shared.models import ProposalKind

# =============================================================================
# 1. CONTRACT
# =============================================================================


class TestSamplingAcceptance(BaseTestLosslessAcceptanceContract):
    @pytest.fixture
    def acceptance_rule(self):
        return accept_sampling


# =============================================================================
# 2. EMPIRICAL CHECK
# =============================================================================

P_ROOT = np.array([0.4, 0.3, 0.2, 0.1])
Q_ROOT = np.array([0.1, 0.2, 0.3, 0.4])
P_NEXT = np.array([0.25, 0.25, 0.25, 0.25])
Q_NEXT = np.array([0.7, 0.1, 0.1, 0.1])


def _cycle(sampler: NumpySampler) -> int:
    tree = DraftTree.rooted(0, ProposalKind.SAMPLED)
    tree.dists[ROOT] = Q_ROOT
    first = tree.add(sampler.categorical(Q_ROOT), ROOT, 0.0)
    tree.dists[first] = Q_NEXT
    tree.add(sampler.categorical(Q_NEXT), first, 0.0)
    probs = np.stack([P_ROOT, P_NEXT, P_NEXT])

    verdict = accept_sampling(tree, probs, sampler)
    if verdict.accepted:
        return tree.tokens[verdict.path[1]]
    return verdict.bonus


@pytest.mark.slow
def test_first_emitted_token_passes_a_chi_square_test():
    sampler = NumpySampler(seed=11)
    draws = 200_000

    counts = np.bincount([_cycle(sampler) for _ in range(draws)], minlength=4)
    result = stats.chisquare(counts, P_ROOT * draws)

    assert result.pvalue > 0.01
