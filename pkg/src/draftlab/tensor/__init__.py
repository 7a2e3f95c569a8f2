from draftlab.tensor.tensor import (
    Tensor,
    build_tape,
    concat,
    grad_enabled,
    matmul,
    no_grad,
    stack,
)

__all__ = [
    "Tensor",
    "build_tape",
    "concat",
    "grad_enabled",
    "matmul",
    "no_grad",
    "stack",
]
