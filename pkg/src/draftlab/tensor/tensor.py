# src/draftlab/tensor/tensor.py
"""
A dense float64 tensor with reverse-mode automatic differentiation.

Every operation on tensors that require gradients records its inputs and a
backward rule on the output; `Tensor.backward()` orders the recorded
operations topologically (the tape) and propagates gradients to every
reachable leaf. All stored values must be finite: an operation producing a
NaN or an infinity raises `NumericError` instead of storing it.
"""

from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any

import numpy as np

from draftlab.shared.exceptions import (
    ContractViolationError,
    DimensionError,
    NumericError,
)

DTYPE = np.float64

_grad_enabled: ContextVar[bool] = ContextVar("draftlab_grad_enabled", default=True)

BackwardRule = Callable[[np.ndarray], Sequence[np.ndarray | None]]


@contextmanager
def no_grad() -> Iterator[None]:
    """Disables tape recording for the enclosed block (per thread / task)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def grad_enabled() -> bool:
    return _grad_enabled.get()


def _check_finite(array: np.ndarray, op: str) -> None:
    if not np.isfinite(array).all():
        raise NumericError(f"non-finite values produced by '{op}'")


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sums `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """Dense N-dimensional float64 array with optional gradient tracking."""

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, data: Any, requires_grad: bool = False, *, op: str = "leaf"):
        array = np.array(data, dtype=DTYPE, copy=True)
        _check_finite(array, op)
        self.data: np.ndarray = array
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.op = op
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardRule | None = None

    # --- Construction helpers ---

    @classmethod
    def _from_op(
        cls,
        data: np.ndarray,
        parents: tuple["Tensor", ...],
        backward: BackwardRule,
        op: str,
    ) -> "Tensor":
        out = cls.__new__(cls)
        array = np.asarray(data, dtype=DTYPE)
        _check_finite(array, op)
        out.data = array
        out.grad = None
        out.op = op
        out._parents = ()
        out._backward = None
        out.requires_grad = grad_enabled() and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = parents
            out._backward = backward
        return out

    @staticmethod
    def lift(value: "Tensor | Any") -> "Tensor":
        return value if isinstance(value, Tensor) else Tensor(value)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return (
            f"Tensor(shape={self.shape}, op={self.op}, "
            f"requires_grad={self.requires_grad})"
        )

    # --- Autodiff ---

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """
        Propagates d(self)/d(leaf) into `.grad` of every leaf reachable from
        this scalar. Gradients accumulate into existing `.grad` arrays.
        """
        if self.data.size != 1:
            raise ContractViolationError(
                f"backward() needs a scalar loss, got shape {self.shape}"
            )
        tape = build_tape(self)
        pending: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(tape):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            if node._backward is None:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            for parent, parent_grad in zip(
                node._parents, node._backward(grad), strict=True
            ):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + parent_grad
                else:
                    pending[key] = parent_grad

    # --- Arithmetic ---

    def __add__(self, other: "Tensor | Any") -> "Tensor":
        return add(self, Tensor.lift(other))

    __radd__ = __add__

    def __sub__(self, other: "Tensor | Any") -> "Tensor":
        return add(self, neg(Tensor.lift(other)))

    def __rsub__(self, other: "Tensor | Any") -> "Tensor":
        return add(Tensor.lift(other), neg(self))

    def __mul__(self, other: "Tensor | Any") -> "Tensor":
        return mul(self, Tensor.lift(other))

    __rmul__ = __mul__

    def __truediv__(self, other: "Tensor | Any") -> "Tensor":
        if isinstance(other, Tensor):
            return mul(self, reciprocal(other))
        return mul(self, Tensor(1.0 / np.asarray(other, dtype=DTYPE)))

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        return getitem(self, index)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False):
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False):
        count = self.data.size if axis is None else np.prod(
            [self.data.shape[a] for a in np.atleast_1d(axis)]
        )
        return reduce_sum(self, axis, keepdims) * (1.0 / float(count))

    def reshape(self, *shape: int) -> "Tensor":
        return reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        return transpose(self, axes)

    def exp(self) -> "Tensor":
        return exp(self)

    def log(self) -> "Tensor":
        return log(self)


def build_tape(root: Tensor) -> list[Tensor]:
    """Returns the recorded operations reachable from `root`, inputs first."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in reversed(node._parents):
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


# --- Primitive operations ---


def add(a: Tensor, b: Tensor) -> Tensor:
    def backward(g: np.ndarray):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return Tensor._from_op(a.data + b.data, (a, b), backward, "add")


def neg(a: Tensor) -> Tensor:
    return Tensor._from_op(-a.data, (a,), lambda g: (-g,), "neg")


def mul(a: Tensor, b: Tensor) -> Tensor:
    def backward(g: np.ndarray):
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return Tensor._from_op(a.data * b.data, (a, b), backward, "mul")


def reciprocal(a: Tensor) -> Tensor:
    out = 1.0 / a.data
    return Tensor._from_op(out, (a,), lambda g: (-g * out * out,), "reciprocal")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g: np.ndarray):
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return unbroadcast(grad_a, a.shape), unbroadcast(grad_b, b.shape)

    return Tensor._from_op(np.matmul(a.data, b.data), (a, b), backward, "matmul")


def reduce_sum(
    a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False
) -> Tensor:
    def backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._from_op(
        a.data.sum(axis=axis, keepdims=keepdims), (a,), backward, "sum"
    )


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    return Tensor._from_op(
        a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape"
    )


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes) or tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return Tensor._from_op(
        np.transpose(a.data, axes),
        (a,),
        lambda g: (np.transpose(g, inverse),),
        "transpose",
    )


def _is_basic_index(index: Any) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(
        p is Ellipsis or p is None or isinstance(p, (int, np.integer, slice))
        for p in parts
    )


def getitem(a: Tensor, index: Any) -> Tensor:
    basic = _is_basic_index(index)

    def backward(g: np.ndarray):
        full = np.zeros_like(a.data)
        if basic:
            full[index] += g
        else:
            # repeated indices (embedding lookups) must accumulate
            np.add.at(full, index, g)
        return (full,)

    return Tensor._from_op(np.array(a.data[index]), (a,), backward, "getitem")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = tuple(tensors)
    sizes = [t.shape[axis] for t in parts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g: np.ndarray):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor._from_op(
        np.concatenate([t.data for t in parts], axis=axis), parts, backward, "concat"
    )


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = tuple(tensors)

    def backward(g: np.ndarray):
        return tuple(np.take(g, i, axis=axis) for i in range(len(parts)))

    return Tensor._from_op(
        np.stack([t.data for t in parts], axis=axis), parts, backward, "stack"
    )


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return Tensor._from_op(out, (a,), lambda g: (g * out,), "exp")


def log(a: Tensor) -> Tensor:
    return Tensor._from_op(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def clamp_min(a: Tensor, floor: float) -> Tensor:
    passed = a.data > floor
    return Tensor._from_op(
        np.maximum(a.data, floor), (a,), lambda g: (g * passed,), "clamp_min"
    )
