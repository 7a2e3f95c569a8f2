# src/draftlab/engine/sampler.py
from typing import Protocol, runtime_checkable

import numpy as np

from draftlab.shared.exceptions import DistributionError


@runtime_checkable
class TokenSampler(Protocol):
    """Source of every random decision a generation session makes."""

    def bernoulli(self, p: float) -> bool: ...

    def categorical(self, probs: np.ndarray) -> int: ...


class NumpySampler:
    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def bernoulli(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    def categorical(self, probs: np.ndarray) -> int:
        probs = np.asarray(probs, dtype=np.float64)
        total = probs.sum()
        if not np.isfinite(total) or total <= 0 or (probs < 0).any():
            raise DistributionError("cannot sample from a malformed distribution")
        cumulative = np.cumsum(probs / total)
        index = int(np.searchsorted(cumulative, self.rng.random(), side="right"))
        # the last nonzero entry absorbs rounding in the cumulative sum
        return min(index, int(np.flatnonzero(probs)[-1]))
