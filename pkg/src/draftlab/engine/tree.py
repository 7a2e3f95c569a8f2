# src/draftlab/engine/tree.py
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from draftlab.shared.exceptions import ContractViolationError
from draftlab.shared.models import ProposalKind

ROOT = 0


@dataclass
class DraftTree:
    """
    Candidate tokens of one cycle. Node 0 is the root: the newest emitted
    token, provided by the target. Every other node is a drafted token;
    `dists[i]` is the draft law node i's children were proposed from.
    """

    tokens: list[int]
    parents: list[int]
    depths: list[int]
    cum_logprobs: list[float]
    hidden: list[np.ndarray | None]
    dists: list[np.ndarray | None]
    proposal: ProposalKind = ProposalKind.POINT_MASS
    active_groups: list[int] = field(default_factory=list)

    @classmethod
    def rooted(
        cls, token: int, proposal: ProposalKind = ProposalKind.POINT_MASS
    ) -> "DraftTree":
        return cls([int(token)], [-1], [0], [0.0], [None], [None], proposal)

    def add(self, token: int, parent: int, cum_logprob: float) -> int:
        self.tokens.append(int(token))
        self.parents.append(parent)
        self.depths.append(self.depths[parent] + 1)
        self.cum_logprobs.append(float(cum_logprob))
        self.hidden.append(None)
        self.dists.append(None)
        return len(self.tokens) - 1

    @property
    def size(self) -> int:
        """Drafted node count; the root is not a candidate."""
        return len(self.tokens) - 1

    @property
    def max_depth(self) -> int:
        return max(self.depths)

    def children(self, node: int) -> list[int]:
        return [i for i, p in enumerate(self.parents) if p == node]

    def at_depth(self, depth: int) -> list[int]:
        return [i for i, d in enumerate(self.depths) if d == depth]

    def path_to(self, node: int) -> list[int]:
        path = []
        while node != -1:
            path.append(node)
            node = self.parents[node]
        return path[::-1]

    def is_chain(self) -> bool:
        return all(len(self.at_depth(d)) == 1 for d in range(self.max_depth + 1))

    def visible(self) -> np.ndarray:
        """[n, n] mask: row i flags node i's ancestors and itself."""
        count = len(self.tokens)
        mask = np.zeros((count, count), dtype=bool)
        for node in range(count):
            mask[node, self.path_to(node)] = True
        return mask

    def select(self, keep: Sequence[int]) -> "DraftTree":
        """The sub-tree made of the root and `keep`, which must be ancestor-closed."""
        order = [ROOT, *sorted(i for i in set(keep) if i != ROOT)]
        index = {old: new for new, old in enumerate(order)}
        parents = []
        for old in order:
            parent = self.parents[old]
            if parent != -1 and parent not in index:
                raise ContractViolationError(
                    f"node {old} kept without its parent {parent}"
                )
            parents.append(-1 if parent == -1 else index[parent])
        return DraftTree(
            [self.tokens[i] for i in order],
            parents,
            [self.depths[i] for i in order],
            [self.cum_logprobs[i] for i in order],
            [self.hidden[i] for i in order],
            [self.dists[i] for i in order],
            self.proposal,
            list(self.active_groups),
        )
