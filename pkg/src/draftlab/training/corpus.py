# src/draftlab/training/corpus.py
"""
Byte-level corpora: a seeded order-2 Markov generator and raw text files.
Tokens are byte values, so any corpus fits a 256-entry vocabulary.
"""

import logging
from pathlib import Path

import numpy as np

from draftlab.shared.exceptions import DataError, DependencyError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_ALPHABET = b"abcdefghijklmnopqrstuvwxyz .,;!?"
DEFAULT_CORPUS_LENGTH = 200_000


def markov_corpus(
    length: int = DEFAULT_CORPUS_LENGTH,
    seed: int = 0,
    alphabet: bytes = DEFAULT_ALPHABET,
    concentration: float = 0.1,
) -> np.ndarray:
    """
    Samples `length` bytes from an order-2 Markov chain over `alphabet`.
    Each two-symbol context gets its own Dirichlet(`concentration`)
    successor law, so small concentrations give peaked, learnable text.
    """
    if length < 2:
        raise ParameterError("markov_corpus needs length >= 2")
    rng = np.random.default_rng(seed)
    size = len(alphabet)
    table = rng.dirichlet(np.full(size, concentration), size=(size, size))
    cumulative = table.cumsum(axis=-1)
    draws = rng.random(length)
    symbols = np.empty(length, dtype=np.int64)
    symbols[:2] = rng.integers(0, size, 2)
    for i in range(2, length):
        row = cumulative[symbols[i - 2], symbols[i - 1]]
        symbols[i] = min(int(np.searchsorted(row, draws[i], side="right")), size - 1)
    return np.frombuffer(alphabet, dtype=np.uint8)[symbols].astype(np.int64)


def read_corpus(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DependencyError("corpus", str(path))
    tokens = np.frombuffer(path.read_bytes(), dtype=np.uint8).astype(np.int64)
    if tokens.size == 0:
        raise DataError(f"corpus {path} is empty")
    logger.info("Loaded corpus", extra={"path": str(path), "tokens": int(tokens.size)})
    return tokens


def split_corpus(
    tokens: np.ndarray, holdout_fraction: float
) -> tuple[np.ndarray, np.ndarray]:
    """Splits off the trailing `holdout_fraction` of the corpus for evaluation."""
    cut = len(tokens) - int(round(len(tokens) * holdout_fraction))
    return tokens[:cut], tokens[cut:]


def sample_windows(
    tokens: np.ndarray, count: int, length: int, rng: np.random.Generator
) -> np.ndarray:
    """`count` random contiguous windows [count, length] of the corpus."""
    if len(tokens) < length:
        raise DataError(
            f"corpus of {len(tokens)} tokens is shorter than a window of {length}"
        )
    starts = rng.integers(0, len(tokens) - length + 1, size=count)
    return np.stack([tokens[s : s + length] for s in starts])


def tile_windows(tokens: np.ndarray, length: int) -> np.ndarray:
    """Non-overlapping windows over the corpus, in order; the remainder is dropped."""
    if len(tokens) < length:
        raise DataError(
            f"corpus of {len(tokens)} tokens is shorter than a window of {length}"
        )
    count = len(tokens) // length
    return tokens[: count * length].reshape(count, length)
