"""Self-attention evaluation, key/value injection and flow-guided recombination."""

from __future__ import annotations

from .types import (  # isort: skip
    AttentionTensor,
    FeatureBlock,
    FloatConfig,
    FlowDirection,
    HookSelector,
    ProjectionSet,
)
from .ops import attention_weights, inject_kv, self_attention, softmax_rows
from .recombine import float_recombine


__all__ = [
    "AttentionTensor",
    "FeatureBlock",
    "FloatConfig",
    "FlowDirection",
    "HookSelector",
    "ProjectionSet",
    "attention_weights",
    "float_recombine",
    "inject_kv",
    "self_attention",
    "softmax_rows",
]
