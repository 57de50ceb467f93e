"""Optical flow on normal maps, ``.flo`` interchange and motion masks."""

from __future__ import annotations

from .types import BinaryMask, FlowField, FlowParams  # isort: skip
from .estimate import endpoint_error, estimate_flow
from .flo import read_flo, write_flo
from .mask import DEFAULT_THRESHOLD, compute_mask


__all__ = [
    "DEFAULT_THRESHOLD",
    "BinaryMask",
    "FlowField",
    "FlowParams",
    "compute_mask",
    "endpoint_error",
    "estimate_flow",
    "read_flo",
    "write_flo",
]
