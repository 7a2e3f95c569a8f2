# src/draftlab/models/layers.py
"""
Building blocks shared by the target and draft models: a parameter
container, rotary position embedding, a Llama-style decoder block and the
per-layer key/value cache used during inference.
"""

import hashlib
from collections.abc import Iterator, Sequence

import numpy as np

from draftlab.models.config import ModelConfig
from draftlab.shared.exceptions import CacheStateError, DimensionError
from draftlab.tensor import Tensor, concat
from draftlab.tensor import functional as F

INIT_STD = 0.02


class Module:
    """Holds named `Tensor` parameters and nested sub-modules."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._children: dict[str, Module] = {}

    def register(self, name: str, value: np.ndarray, trainable: bool = True) -> Tensor:
        tensor = Tensor(value, requires_grad=trainable)
        self._params[name] = tensor
        return tensor

    def add_child(self, name: str, child: "Module") -> None:
        self._children[name] = child

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        yield from self._params.items()
        for prefix, child in self._children.items():
            for name, tensor in child.named_parameters():
                yield f"{prefix}.{name}", tensor

    def parameters(self, trainable_only: bool = False) -> list[Tensor]:
        named = self.named_parameters()
        return [t for _, t in named if t.requires_grad or not trainable_only]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        if set(own) != set(state):
            missing = sorted(set(own) - set(state))
            unexpected = sorted(set(state) - set(own))
            raise DimensionError(
                f"state mismatch: missing={missing} unexpected={unexpected}"
            )
        for name, tensor in own.items():
            if tensor.shape != state[name].shape:
                raise DimensionError(
                    f"{name}: expected shape {tensor.shape}, got {state[name].shape}"
                )
            tensor.data[...] = state[name]

    def zero_grad(self) -> None:
        for _, tensor in self.named_parameters():
            tensor.zero_grad()

    def checksum(self) -> str:
        return tensor_checksum(self.named_parameters())


def tensor_checksum(
    named: Iterator[tuple[str, Tensor]] | Sequence[tuple[str, Tensor]],
) -> str:
    digest = hashlib.sha256()
    for name, tensor in named:
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(tensor.data).tobytes())
    return digest.hexdigest()


def init_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.normal(0.0, INIT_STD, size=(rows, cols))


# --- Rotary position embedding ---


def rope_tables(
    positions: np.ndarray, head_dim: int, base: float
) -> tuple[np.ndarray, np.ndarray]:
    half = head_dim // 2
    inv_freq = base ** (-np.arange(half, dtype=np.float64) / half)
    angles = np.outer(np.asarray(positions, dtype=np.float64), inv_freq)
    return np.cos(angles), np.sin(angles)


def apply_rope(x: Tensor, cos: np.ndarray, sin: np.ndarray) -> Tensor:
    """Rotates the two halves of the last axis of x [B, H, T, hd]."""
    half = x.shape[-1] // 2
    x1 = x[..., :half]
    x2 = x[..., half:]
    c, s = Tensor(cos), Tensor(sin)
    return concat([x1 * c - x2 * s, x1 * s + x2 * c], axis=-1)


def token_digest(tokens: Sequence[int]) -> str:
    raw = np.asarray(tokens, dtype=np.int64).tobytes()
    return hashlib.sha256(raw).hexdigest()


def causal_bias(new: int, prefix: int = 0) -> np.ndarray:
    """Additive mask [new, prefix + new]: prefix visible, new tokens causal."""
    bias = np.zeros((new, prefix + new))
    bias[:, prefix:] = np.where(np.triu(np.ones((new, new)), k=1) > 0, F.MASKED, 0.0)
    return bias


# --- Decoder block ---


class DecoderBlock(Module):
    """Pre-norm attention + SwiGLU MLP block with residual connections."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__()
        d, inner = config.hidden_size, config.intermediate_size
        self.config = config
        self.attn_norm = self.register("attn_norm", np.ones(d))
        self.wq = self.register("wq", init_matrix(rng, d, d))
        self.wk = self.register("wk", init_matrix(rng, d, d))
        self.wv = self.register("wv", init_matrix(rng, d, d))
        self.wo = self.register("wo", init_matrix(rng, d, d))
        self.mlp_norm = self.register("mlp_norm", np.ones(d))
        self.w_gate = self.register("w_gate", init_matrix(rng, d, inner))
        self.w_up = self.register("w_up", init_matrix(rng, d, inner))
        self.w_down = self.register("w_down", init_matrix(rng, inner, d))

    def _split_heads(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        heads, head_dim = self.config.num_heads, self.config.head_dim
        return x.reshape(batch, length, heads, head_dim).transpose(0, 2, 1, 3)

    def forward(
        self,
        x: Tensor,
        positions: np.ndarray,
        bias: np.ndarray | None = None,
        prefix: tuple[Tensor, Tensor] | None = None,
    ) -> tuple[Tensor, Tensor, Tensor]:
        """
        x [B, T, d] at `positions` [T]. `prefix` holds keys/values
        [B, H, P, hd] placed before the new tokens; `bias` is an additive
        mask broadcastable to [B, H, T, P + T] (causal when omitted).
        Returns the block output and the new tokens' keys and values.
        """
        batch, length, _ = x.shape
        h = F.rms_norm(x, self.attn_norm, self.config.rms_eps)
        cos, sin = rope_tables(positions, self.config.head_dim, self.config.rope_base)
        q = apply_rope(self._split_heads(h @ self.wq), cos, sin)
        k = apply_rope(self._split_heads(h @ self.wk), cos, sin)
        v = self._split_heads(h @ self.wv)

        keys, values = k, v
        prefix_len = 0
        if prefix is not None:
            keys = concat([prefix[0], k], axis=2)
            values = concat([prefix[1], v], axis=2)
            prefix_len = prefix[0].shape[2]
        if bias is None:
            bias = causal_bias(length, prefix_len)

        scale = 1.0 / np.sqrt(self.config.head_dim)
        scores = (q @ keys.transpose(0, 1, 3, 2)) * scale + Tensor(bias)
        attended = F.softmax(scores, axis=-1) @ values
        merged = attended.transpose(0, 2, 1, 3).reshape(batch, length, -1)
        x = x + merged @ self.wo

        m = F.rms_norm(x, self.mlp_norm, self.config.rms_eps)
        x = x + (F.silu(m @ self.w_gate) * (m @ self.w_up)) @ self.w_down
        return x, k, v


# --- Inference cache ---


class KVCache:
    """
    Keys and values of committed tokens, one [1, H, T, hd] array pair per
    layer, plus the token ids they were computed from. `start_position` is
    the position id of the first cached entry.
    """

    def __init__(self, num_layers: int, start_position: int = 0):
        self.num_layers = num_layers
        self.start_position = start_position
        self.keys: list[np.ndarray | None] = [None] * num_layers
        self.values: list[np.ndarray | None] = [None] * num_layers
        self.tokens: list[int] = []

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def next_position(self) -> int:
        return self.start_position + len(self.tokens)

    def layer(self, index: int) -> tuple[Tensor, Tensor] | None:
        if self.keys[index] is None:
            return None
        return Tensor(self.keys[index]), Tensor(self.values[index])

    def append(
        self,
        tokens: Sequence[int],
        keys: Sequence[np.ndarray],
        values: Sequence[np.ndarray],
    ) -> None:
        """Commits `tokens` with their per-layer keys/values [1, H, n, hd]."""
        if len(keys) != self.num_layers or len(values) != self.num_layers:
            raise CacheStateError("append needs keys and values for every layer")
        for i in range(self.num_layers):
            if keys[i].shape[2] != len(tokens):
                raise CacheStateError("key count differs from token count")
            if self.keys[i] is None:
                self.keys[i], self.values[i] = keys[i].copy(), values[i].copy()
            else:
                self.keys[i] = np.concatenate([self.keys[i], keys[i]], axis=2)
                self.values[i] = np.concatenate([self.values[i], values[i]], axis=2)
        self.tokens.extend(int(t) for t in tokens)

    def truncate(self, length: int) -> None:
        if not 0 <= length <= len(self.tokens):
            raise CacheStateError(
                f"cannot truncate {len(self.tokens)} entries to {length}"
            )
        for i in range(self.num_layers):
            if self.keys[i] is None:
                continue
            if length == 0:
                self.keys[i] = self.values[i] = None
            else:
                self.keys[i] = self.keys[i][:, :, :length]
                self.values[i] = self.values[i][:, :, :length]
        del self.tokens[length:]

    def token_checksum(self) -> str:
        return token_digest(self.tokens)
