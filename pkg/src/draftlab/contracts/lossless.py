# src/draftlab/contracts/lossless.py
"""
Contract for acceptance rules: whatever the draft proposes, the tokens a
cycle emits must follow the target law. Laws are computed exactly by
enumerating every random decision the rule (and the drafting) takes.
"""

import itertools
import math
from collections import defaultdict
from collections.abc import Callable, Hashable

import numpy as np
import pytest

from draftlab.engine.sampler import TokenSampler
from draftlab.engine.tree import ROOT, DraftTree
from draftlab.shared.exceptions import ContractViolationError
from draftlab.shared.models import ProposalKind

AcceptanceRule = Callable[[DraftTree, np.ndarray, TokenSampler], object]

TV_TOLERANCE = 1e-12
ROOT_TOKEN = 0


class _Branch(Exception):
    def __init__(self, options: list[tuple[Hashable, float]]):
        super().__init__("sampler ran past its script")
        self.options = options


class ScriptedSampler:
    """
    Replays a fixed list of decisions and tracks their joint probability.
    Asking for a decision beyond the script raises `_Branch` with every
    possible outcome, which `enumerate_outcomes` turns into new scripts.
    """

    def __init__(self, script: list[Hashable]):
        self.script = script
        self.position = 0
        self.weight = 1.0

    def _decide(self, options: list[tuple[Hashable, float]]) -> Hashable:
        if self.position == len(self.script):
            raise _Branch(options)
        value = self.script[self.position]
        self.position += 1
        self.weight *= dict(options)[value]
        return value

    def bernoulli(self, p: float) -> bool:
        p = min(max(float(p), 0.0), 1.0)
        return bool(self._decide([(True, p), (False, 1.0 - p)]))

    def categorical(self, probs: np.ndarray) -> int:
        probs = np.asarray(probs, dtype=np.float64)
        probs = probs / probs.sum()
        return int(self._decide([(i, float(w)) for i, w in enumerate(probs)]))


def enumerate_outcomes(
    run: Callable[[TokenSampler], Hashable],
) -> dict[Hashable, float]:
    """Exact law of `run(sampler)` over every decision sequence of positive mass."""
    law: dict[Hashable, float] = defaultdict(float)
    scripts: list[list[Hashable]] = [[]]
    while scripts:
        script = scripts.pop()
        sampler = ScriptedSampler(script)
        try:
            outcome = run(sampler)
        except _Branch as branch:
            scripts.extend(script + [value] for value, p in branch.options if p > 0)
            continue
        law[outcome] += sampler.weight
    return dict(law)


def total_variation(law: dict[int, float], probs: np.ndarray) -> float:
    support = set(law) | set(range(len(probs)))
    return 0.5 * sum(
        abs(law.get(x, 0.0) - (probs[x] if x < len(probs) else 0.0)) for x in support
    )


def _emitted(tree: DraftTree, verdict) -> tuple[int, ...]:
    return (*(tree.tokens[i] for i in verdict.path[1:]), verdict.bonus)


class _Laws:
    """Random target and draft laws for every context of up to `depth` tokens."""

    def __init__(self, rng: np.random.Generator, vocab: int, depth: int, alpha: float):
        self.vocab = vocab
        contexts = [()]
        for length in range(1, depth + 1):
            contexts += list(itertools.product(range(vocab), repeat=length))
        self.p = {c: rng.dirichlet(np.full(vocab, alpha)) for c in contexts}
        self.q = {c: rng.dirichlet(np.full(vocab, alpha)) for c in contexts}

    def target_probs(self, tree: DraftTree) -> np.ndarray:
        rows = []
        for node in range(len(tree.tokens)):
            context = tuple(tree.tokens[i] for i in tree.path_to(node)[1:])
            rows.append(self.p[context])
        return np.stack(rows)


class BaseTestLosslessAcceptanceContract:
    """
    Contract: an acceptance rule is lossless. The inheriting class
    provides the rule through the `acceptance_rule` fixture.
    """

    @pytest.fixture
    def acceptance_rule(self) -> AcceptanceRule:
        """
        This fixture MUST be implemented by the inheriting test class.
        It returns a function (tree, target_probs [nodes, V], sampler) ->
        verdict, where the verdict exposes `path` (node indices starting at
        the root) and `bonus` (the token drawn from the target).
        """
        raise NotImplementedError(
            "To use the contract, you must implement the 'acceptance_rule' fixture."
        )

    # --- Helpers ---

    @staticmethod
    def _sampled_chain_law(rule: AcceptanceRule, laws: _Laws, gamma: int) -> dict:
        def run(sampler: TokenSampler) -> tuple[int, ...]:
            tree = DraftTree.rooted(ROOT_TOKEN, ProposalKind.SAMPLED)
            node, context = ROOT, ()
            for _ in range(gamma):
                q = laws.q[context]
                token = sampler.categorical(q)
                tree.dists[node] = q
                logprob = tree.cum_logprobs[node] + math.log(q[token])
                node = tree.add(token, node, logprob)
                context += (token,)
            return _emitted(tree, rule(tree, laws.target_probs(tree), sampler))

        return enumerate_outcomes(run)

    @staticmethod
    def _first_token_law(law: dict) -> dict[int, float]:
        first: dict[int, float] = defaultdict(float)
        for emitted, weight in law.items():
            first[emitted[0]] += weight
        return first

    # --- Start of Contract Tests ---

    @pytest.mark.parametrize("gamma", [1, 2])
    @pytest.mark.parametrize("vocab", [2, 3, 4])
    @pytest.mark.parametrize("seed", range(5))
    def test_sampled_chain_first_token_follows_target(
        self, acceptance_rule, gamma, vocab, seed
    ):
        laws = _Laws(np.random.default_rng(seed), vocab, gamma, alpha=1.0)

        law = self._sampled_chain_law(acceptance_rule, laws, gamma)

        assert math.isclose(sum(law.values()), 1.0, abs_tol=1e-12)
        assert total_variation(self._first_token_law(law), laws.p[()]) < TV_TOLERANCE

    @pytest.mark.parametrize("vocab", [2, 3, 4])
    @pytest.mark.parametrize("seed", range(5))
    def test_sampled_chain_second_token_follows_target(
        self, acceptance_rule, vocab, seed
    ):
        """Given the first token was a drafted one, the next follows p(. | first)."""
        laws = _Laws(np.random.default_rng(100 + seed), vocab, 2, alpha=1.0)

        law = self._sampled_chain_law(acceptance_rule, laws, 2)

        for first in range(vocab):
            joint: dict[int, float] = defaultdict(float)
            for emitted, weight in law.items():
                if len(emitted) >= 2 and emitted[0] == first:
                    joint[emitted[1]] += weight
            mass = sum(joint.values())
            if mass < 1e-9:
                continue
            conditional = {x: w / mass for x, w in joint.items()}
            assert total_variation(conditional, laws.p[(first,)]) < 1e-10

    @pytest.mark.parametrize("vocab", [2, 3, 4])
    def test_draft_missing_target_support_is_lossless(self, acceptance_rule, vocab):
        laws = _Laws(np.random.default_rng(7), vocab, 2, alpha=1.0)
        for context in laws.q:
            laws.q[context] = np.eye(vocab)[0]

        law = self._sampled_chain_law(acceptance_rule, laws, 2)

        assert total_variation(self._first_token_law(law), laws.p[()]) < TV_TOLERANCE

    @pytest.mark.parametrize("width", [1, 2, 3])
    @pytest.mark.parametrize("seed", range(5))
    def test_point_mass_tree_first_token_follows_target(
        self, acceptance_rule, width, seed
    ):
        vocab = 4
        laws = _Laws(np.random.default_rng(200 + seed), vocab, 2, alpha=0.5)
        tree = DraftTree.rooted(ROOT_TOKEN, ProposalKind.POINT_MASS)
        for token in np.argsort(-laws.q[()], kind="stable")[:width]:
            child = tree.add(int(token), ROOT, math.log(laws.q[()][token]))
            grandchild = int(np.argmax(laws.q[(int(token),)]))
            tree.add(grandchild, child, 0.0)
        probs = laws.target_probs(tree)

        law = enumerate_outcomes(
            lambda s: _emitted(tree, acceptance_rule(tree, probs, s))
        )

        assert math.isclose(sum(law.values()), 1.0, abs_tol=1e-12)
        assert total_variation(self._first_token_law(law), laws.p[()]) < TV_TOLERANCE

    def test_emits_at_least_one_token_per_cycle(self, acceptance_rule):
        laws = _Laws(np.random.default_rng(3), 3, 1, alpha=1.0)

        law = self._sampled_chain_law(acceptance_rule, laws, 1)

        assert all(1 <= len(emitted) <= 2 for emitted in law)

    def test_zero_draft_probability_is_a_contract_violation(self, acceptance_rule):
        tree = DraftTree.rooted(ROOT_TOKEN, ProposalKind.SAMPLED)
        tree.dists[ROOT] = np.array([1.0, 0.0])
        tree.add(1, ROOT, 0.0)
        probs = np.full((2, 2), 0.5)

        with pytest.raises(ContractViolationError):
            acceptance_rule(tree, probs, ScriptedSampler([True]))
