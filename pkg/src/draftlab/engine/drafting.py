# src/draftlab/engine/drafting.py
"""
Chain and tree drafting. Ties in every argmax and top-k go to the lowest
token id, and tree ranks break cumulative log-prob ties by beam rank then
token id.
"""

import math

import numpy as np

from draftlab.engine.drafters import Drafter
from draftlab.engine.routing import depth_distributions
from draftlab.engine.sampler import TokenSampler
from draftlab.engine.tree import ROOT, DraftTree
from draftlab.models.router import RouterHead
from draftlab.shared.exceptions import ParameterError
from draftlab.shared.models import ProposalKind


def _expand(
    tree: DraftTree,
    drafter: Drafter,
    frontier: list[int],
    temperature: float,
    router: RouterHead | None,
    top_n: int,
) -> np.ndarray:
    hiddens = drafter.hidden(tree, frontier)
    laws = depth_distributions(hiddens, drafter.lm_head, temperature, router, top_n)
    for row, node in enumerate(frontier):
        tree.hidden[node] = hiddens[row]
        tree.dists[node] = laws.probs[row]
    if laws.active_groups is not None:
        tree.active_groups.append(len(laws.active_groups))
    return laws.probs


def draft_chain(
    drafter: Drafter,
    root_token: int,
    gamma: int,
    temperature: float = 0.0,
    sampler: TokenSampler | None = None,
    router: RouterHead | None = None,
    top_n: int = 1,
) -> DraftTree:
    """
    Drafts `gamma` tokens one after another: argmax of the draft law at
    temperature 0, a sample from it otherwise.
    """
    if gamma < 1:
        raise ParameterError("draft_chain needs gamma >= 1")
    if temperature > 0 and sampler is None:
        raise ParameterError("sampled drafting needs a sampler")
    proposal = ProposalKind.SAMPLED if temperature > 0 else ProposalKind.POINT_MASS
    tree = DraftTree.rooted(root_token, proposal)
    node = ROOT
    for _ in range(gamma):
        law = _expand(tree, drafter, [node], temperature, router, top_n)[0]
        token = int(np.argmax(law)) if temperature == 0 else sampler.categorical(law)
        node = tree.add(token, node, tree.cum_logprobs[node] + math.log(law[token]))
    return tree


def draft_tree(
    drafter: Drafter,
    root_token: int,
    depth: int,
    budget: int,
    temperature: float = 0.0,
    router: RouterHead | None = None,
    top_n: int = 1,
) -> DraftTree:
    """
    Dynamic tree: at each depth every frontier node proposes its top-k
    children, and only the global top-k by cumulative log-prob survive
    (k = ceil(budget / depth)). The result keeps the `budget` best nodes.
    """
    if depth < 1 or budget < depth:
        raise ParameterError(
            f"a budget of {budget} cannot hold one path of depth {depth}"
        )
    beam = math.ceil(budget / depth)
    tree = DraftTree.rooted(root_token, ProposalKind.POINT_MASS)
    frontier = [ROOT]
    for _ in range(depth):
        laws = _expand(tree, drafter, frontier, temperature, router, top_n)
        width = min(beam, laws.shape[1])
        candidates = []
        for rank, node in enumerate(frontier):
            law = laws[rank]
            for token in np.argsort(-law, kind="stable")[:width]:
                if law[token] > 0:
                    cum = tree.cum_logprobs[node] + math.log(law[token])
                    candidates.append((-cum, rank, int(token), node))
        candidates.sort()
        frontier = [
            tree.add(token, node, -neg) for neg, _, token, node in candidates[:beam]
        ]
        if not frontier:
            break
    ranked = sorted(
        range(1, len(tree.tokens)),
        key=lambda i: (-tree.cum_logprobs[i], tree.depths[i], i),
    )
    return tree.select(ranked[:budget])
