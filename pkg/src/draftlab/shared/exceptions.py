# src/draftlab/shared/exceptions.py
"""
This module defines the exceptions raised across the lab.

Every failure the pipeline can surface maps to exactly one class here, and
each class carries the process exit code the command-line surface reports
for it, so callers can write portable error-handling logic.
"""


class DraftLabError(Exception):
    """Base exception for all draft-lab errors."""

    exit_code: int = 1


# --- Configuration ---
class ConfigurationError(DraftLabError):
    """Raised when a configuration violates one of its invariants."""

    exit_code = 2


class ParameterError(ConfigurationError):
    """Raised when an operation receives an argument outside its domain."""

    pass


# --- Pipeline dependencies ---
class DependencyError(DraftLabError):
    """
    Raised when a pipeline stage runs before the artifact it depends on
    exists on disk. The message names the missing stage.
    """

    exit_code = 3

    def __init__(self, stage: str, path: str):
        super().__init__(f"missing artifact of stage '{stage}': {path}")
        self.stage = stage
        self.path = path


# --- Data and formats ---
class DataError(DraftLabError):
    """Raised when input data cannot be used (empty or too short corpus)."""

    exit_code = 4


class VocabularyError(DataError):
    """Raised when a token id falls outside the model vocabulary."""

    pass


class DistributionError(DataError):
    """Raised when a probability vector is malformed."""

    pass


class WeightFormatError(DataError):
    """
    Raised when a weight or tensor container is corrupt: bad magic,
    unsupported version, truncated payload or mismatched tied weights.
    """

    pass


# --- Numerics and contracts ---
class NumericError(DraftLabError):
    """Raised when a tensor would store a NaN or an infinity."""

    exit_code = 5


class DimensionError(NumericError):
    """Raised when operand shapes are incompatible."""

    pass


class DegenerateInputError(NumericError):
    """Raised when an input makes an operation undefined (zero-norm vector)."""

    pass


class TrainingDivergedError(NumericError):
    """
    Raised when a training loss becomes non-finite. `dump_path` points to the
    diagnostic dump written before raising, when one could be written.
    """

    def __init__(self, message: str, dump_path: str | None = None):
        super().__init__(message)
        self.dump_path = dump_path


class ContractViolationError(DraftLabError):
    """
    Raised when a documented contract is broken at runtime: a non-scalar
    loss passed to backward, weights that must stay frozen changed, a drafted
    token with zero draft probability.
    """

    exit_code = 5


class CacheStateError(ContractViolationError):
    """
    Raised when a KV cache does not describe a prefix of the tokens it is
    used with, or drifts from a recomputation.
    """

    pass
