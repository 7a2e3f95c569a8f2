# src/draftlab/models/params.py
"""
Parameter accounting, both for the desk models and for published
Llama-family architectures. The token embedding is reported separately so
ratio computations can leave it out.
"""

from dataclasses import dataclass

from draftlab.models.draft import DraftModel
from draftlab.models.layers import Module
from draftlab.models.router import RouterHead
from draftlab.models.target import TargetModel
from draftlab.shared.exceptions import ParameterError
from draftlab.shared.models import ParamReport

MEGA = 1024 * 1024


def _size(module: Module, prefix: str) -> int:
    named = module.named_parameters()
    return sum(t.data.size for name, t in named if name.startswith(prefix))


def count_params(model: Module, include_embedding: bool = False) -> ParamReport:
    """Exact per-component counts of a target, draft or router."""
    if isinstance(model, TargetModel):
        components = {
            "blocks": _size(model, "blocks."),
            "final_norm": model.final_norm.data.size,
            "lm_head": model.lm_head.data.size,
        }
        embedding = model.embedding.data.size
    elif isinstance(model, DraftModel):
        components = {
            "fusion": model.fusion.data.size,
            "block": _size(model, "block."),
            "lm_head": model.lm_head.data.size,
        }
        embedding = model.embedding.data.size
    elif isinstance(model, RouterHead):
        components = {"w1": model.w1.data.size, "w2": model.w2.data.size}
        embedding = 0
    else:
        raise ParameterError(f"cannot count parameters of {type(model).__name__}")
    return ParamReport(components, embedding, include_embedding)


@dataclass(frozen=True)
class ArchitectureSpec:
    """Published shape of a decoder-only model; the draft copies one of its blocks."""

    name: str
    hidden_size: int
    intermediate_size: int
    vocab_size: int
    num_layers: int
    num_heads: int
    num_kv_heads: int
    qkv_bias: bool = False
    fusion_bias: bool = True

    @property
    def kv_dim(self) -> int:
        return self.hidden_size // self.num_heads * self.num_kv_heads

    def block_params(self) -> int:
        h, kv = self.hidden_size, self.kv_dim
        attention = 2 * h * h + 2 * h * kv
        if self.qkv_bias:
            attention += h + 2 * kv
        mlp = 3 * h * self.intermediate_size
        return attention + mlp + 2 * h

    def target_report(self, include_embedding: bool = False) -> ParamReport:
        h = self.hidden_size
        return ParamReport(
            {
                "blocks": self.num_layers * self.block_params(),
                "final_norm": h,
                "lm_head": h * self.vocab_size,
            },
            h * self.vocab_size,
            include_embedding,
        )

    def draft_report(self, include_embedding: bool = False) -> ParamReport:
        h = self.hidden_size
        fusion = 2 * h * h + (h if self.fusion_bias else 0)
        return ParamReport(
            {
                "fusion": fusion,
                "block": self.block_params(),
                "lm_head": h * self.vocab_size,
            },
            h * self.vocab_size,
            include_embedding,
        )


LLAMA2_7B = ArchitectureSpec("llama2-7b", 4096, 11008, 32000, 32, 32, 32)
LLAMA3_8B = ArchitectureSpec("llama3-8b", 4096, 14336, 128256, 32, 32, 8)
QWEN25_7B = ArchitectureSpec(
    "qwen2.5-7b", 3584, 18944, 152064, 28, 28, 4, qkv_bias=True
)

PRESETS = {spec.name: spec for spec in (LLAMA2_7B, LLAMA3_8B, QWEN25_7B)}
