"""Normal-conditioning, coherence and stability metrics."""

from __future__ import annotations

from .image import psnr, psnr_from_rmse, rmse, ssim
from .report import EXTERNAL_FIELDS, MetricReport
from .sequence import (
    DEFAULT_K,
    anchor_indices,
    normal_condition_metrics,
    self_ssim,
    temporal_variance,
)


__all__ = [
    "DEFAULT_K",
    "EXTERNAL_FIELDS",
    "MetricReport",
    "anchor_indices",
    "normal_condition_metrics",
    "psnr",
    "psnr_from_rmse",
    "rmse",
    "self_ssim",
    "ssim",
    "temporal_variance",
]
