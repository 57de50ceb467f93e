"""Bilinear flow warping and grid resampling."""

from __future__ import annotations

from .bilinear import ScalarField, bilinear_warp, warp_channels
from .resample import resample_flow, resample_mask, resize_bilinear


__all__ = [
    "ScalarField",
    "bilinear_warp",
    "resample_flow",
    "resample_mask",
    "resize_bilinear",
    "warp_channels",
]
