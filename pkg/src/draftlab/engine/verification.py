# src/draftlab/engine/verification.py
"""
Verification of a drafted tree against the target.

The target evaluates the root and every drafted node in one pass under a
tree attention mask. Acceptance walks down from the root and always ends
with one bonus token drawn from the target at the last accepted node.

Sampled chains use the classic rule: accept x with min(1, p(x) / q(x)),
otherwise emit a token from norm(max(0, p - q)). Tree candidates are
deterministic (point-mass proposals), so siblings are tried in rank order:
x is accepted with probability p_res(x); after a rejection p_res(x) is set
to 0 and p_res renormalized; the bonus token comes from the final p_res.
Both preserve the target law exactly.
"""

from typing import NamedTuple

import numpy as np

from draftlab.engine.sampler import TokenSampler
from draftlab.engine.tree import ROOT, DraftTree
from draftlab.models.layers import KVCache
from draftlab.models.target import TargetModel, TreeOutput
from draftlab.shared.exceptions import ContractViolationError, ParameterError
from draftlab.shared.models import ProposalKind


class Verdict(NamedTuple):
    path: list[int]
    bonus: int
    depth_flags: tuple[bool, ...]

    @property
    def accepted(self) -> int:
        return len(self.path) - 1


class Verification(NamedTuple):
    verdict: Verdict
    output: TreeOutput


def tempered_probs(logits: np.ndarray, temperature: float) -> np.ndarray:
    scaled = logits / temperature
    shifted = np.exp(scaled - scaled.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def accept_greedy(tree: DraftTree, target_logits: np.ndarray) -> Verdict:
    node, path, flags = ROOT, [ROOT], []
    while True:
        choice = int(np.argmax(target_logits[node]))
        children = tree.children(node)
        if not children:
            return Verdict(path, choice, tuple(flags))
        match = [c for c in children if tree.tokens[c] == choice]
        if not match:
            flags.append(False)
            return Verdict(path, choice, tuple(flags))
        flags.append(True)
        node = match[0]
        path.append(node)


def _accept_sampled(
    tree: DraftTree, node: int, child: int, p: np.ndarray, sampler: TokenSampler
) -> int | None:
    """Returns None when `child` is accepted, else the replacement token."""
    q = tree.dists[node]
    token = tree.tokens[child]
    if q is None or q[token] <= 0:
        raise ContractViolationError(
            f"drafted token {token} has zero draft probability"
        )
    if sampler.bernoulli(min(1.0, p[token] / q[token])):
        return None
    residual = np.maximum(p - q, 0.0)
    return sampler.categorical(residual / residual.sum())


def _accept_point_mass(
    tree: DraftTree, children: list[int], p: np.ndarray, sampler: TokenSampler
) -> tuple[int | None, int | None]:
    """Returns (accepted child, None) or (None, replacement token)."""
    residual = p.copy()
    for child in children:
        token = tree.tokens[child]
        if sampler.bernoulli(float(residual[token])):
            return child, None
        residual[token] = 0.0
        residual /= residual.sum()
    return None, sampler.categorical(residual)


def accept_sampling(
    tree: DraftTree, target_probs: np.ndarray, sampler: TokenSampler
) -> Verdict:
    node, path, flags = ROOT, [ROOT], []
    while True:
        p = target_probs[node]
        children = tree.children(node)
        if not children:
            return Verdict(path, sampler.categorical(p), tuple(flags))
        if tree.proposal is ProposalKind.SAMPLED:
            if len(children) != 1:
                raise ContractViolationError("sampled proposals must form a chain")
            replacement = _accept_sampled(tree, node, children[0], p, sampler)
            accepted = children[0] if replacement is None else None
        else:
            accepted, replacement = _accept_point_mass(tree, children, p, sampler)
        if accepted is None:
            flags.append(False)
            return Verdict(path, replacement, tuple(flags))
        flags.append(True)
        node = accepted
        path.append(node)


def _evaluate(tree: DraftTree, target: TargetModel, cache: KVCache) -> TreeOutput:
    return target.forward_tree(cache, tree.tokens, tree.depths, tree.visible())


def verify_greedy(tree: DraftTree, target: TargetModel, cache: KVCache) -> Verification:
    output = _evaluate(tree, target, cache)
    return Verification(accept_greedy(tree, output.logits), output)


def verify_sampling(
    tree: DraftTree,
    target: TargetModel,
    cache: KVCache,
    temperature: float,
    sampler: TokenSampler,
) -> Verification:
    if temperature <= 0:
        raise ParameterError("verify_sampling needs a positive temperature")
    output = _evaluate(tree, target, cache)
    probs = tempered_probs(output.logits, temperature)
    return Verification(accept_sampling(tree, probs, sampler), output)
