"""Sequence-level measures: Self-SSIM, normal-conditioning fidelity and
background temporal variance.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Sequence

import numpy as np

from ..errors import InvalidParameterError, ShapeMismatchError
from ..flow.estimate import estimate_flow
from ..flow.types import FlowParams
from ..imaging.types import Image, NormalMap, decode_normals, encode_normals
from ..toygen.pipeline import FrameSequence
from .image import psnr_from_rmse, rmse, ssim
from .report import MetricReport


logger = logging.getLogger(__name__)

DEFAULT_K = 10
NORMAL_PEAK = 255.0
DEFAULT_FLOW_PEAK = 20.0


def _frames_of(frames: FrameSequence | Sequence[Image]) -> list[Image]:
    if isinstance(frames, FrameSequence):
        return list(frames.frames)
    return list(frames)


def anchor_indices(n_frames: int, k: int) -> list[int]:
    """``k`` equally spaced indices over ``n_frames``, rounded half-up, deduplicated.

    Example:
        >>> anchor_indices(4, 3)
        [0, 2, 3]
    """
    if k < 1 or k > n_frames:
        raise InvalidParameterError(f"k must be in [1, {n_frames}], got {k}")
    if k == 1:
        return [0]
    span = n_frames - 1
    # floor(j * span / (k - 1) + 1/2) in exact integer arithmetic
    picked = ((2 * j * span + (k - 1)) // (2 * (k - 1)) for j in range(k))
    return sorted(set(picked))


def self_ssim(frames: FrameSequence | Sequence[Image], k: int = DEFAULT_K) -> float:
    """Average SSIM of the frames against ``k`` equally spaced anchor frames.

    Every non-anchor frame is compared with every anchor. When all frames
    are anchors, every pair of distinct anchors is compared instead; a
    single frame scores 1.0.

    Args:
        frames: Generated frames, values in ``[0, 1]``.
        k: Number of anchors, ``1 <= k <= len(frames)``.

    Raises:
        InvalidParameterError: Empty sequence or ``k`` out of range.
    """
    images = _frames_of(frames)
    if not images:
        raise InvalidParameterError("self-ssim of an empty sequence")
    anchors = anchor_indices(len(images), k)
    others = [i for i in range(len(images)) if i not in set(anchors)]
    if others:
        pairs = [(i, a) for i in others for a in anchors]
    else:
        pairs = list(itertools.combinations(anchors, 2))
    if not pairs:
        return 1.0
    scores = [ssim(images[i], images[j]) for i, j in pairs]
    return float(np.mean(scores))


def _encoded(normals: NormalMap | Image) -> tuple[np.ndarray, NormalMap]:
    if isinstance(normals, NormalMap):
        return encode_normals(normals).astype(np.float64), normals
    if normals.channels != 3:
        raise ShapeMismatchError(f"estimated normals need 3 channels, got {normals.channels}")
    encoded = np.clip(np.rint(normals.data * 255.0), 0.0, 255.0)
    return encoded, decode_normals(encoded)


def _average_psnr(errors: list[float], peak: float) -> float:
    finite = [psnr_from_rmse(e, peak) for e in errors if e > 0.0]
    return float(np.mean(finite)) if finite else math.inf


def normal_condition_metrics(
    input_normals: Sequence[NormalMap],
    estimated_normals: Sequence[NormalMap | Image],
    flow_params: FlowParams | None = None,
    flow_peak: float = DEFAULT_FLOW_PEAK,
) -> MetricReport:
    """Measure how faithfully generated frames follow their normal maps.

    Args:
        input_normals: Conditioning normal maps.
        estimated_normals: Normals recovered from the generated frames,
            either decoded :class:`NormalMap` objects or ``[0, 1]`` RGB
            images in the standard 8-bit encoding.
        flow_params: Estimator parameters for the F-metrics.
        flow_peak: PSNR peak for flow components, in pixels.

    Returns:
        Report with the N-metrics and, for two or more frames, the
        F-metrics. PSNR averages skip frames with zero error and are
        infinite only when every frame matches exactly.

    Raises:
        ShapeMismatchError: Lengths or sizes differ.
        InvalidParameterError: Empty sequences.
    """
    if len(input_normals) != len(estimated_normals):
        raise ShapeMismatchError(
            f"{len(input_normals)} input vs {len(estimated_normals)} estimated normal maps",
        )
    if not input_normals:
        raise InvalidParameterError("normal-condition metrics of an empty sequence")

    n_errors: list[float] = []
    decoded: list[NormalMap] = []
    for index, (given, estimated) in enumerate(zip(input_normals, estimated_normals, strict=True)):
        encoded, as_normals = _encoded(estimated)
        if as_normals.shape != given.shape:
            raise ShapeMismatchError(f"frame {index}: {as_normals.shape} vs {given.shape}")
        reference = encode_normals(given).astype(np.float64)
        n_errors.append(rmse(Image(data=reference), Image(data=encoded)))
        decoded.append(as_normals)

    f_errors: list[float] = []
    for i in range(1, len(input_normals)):
        reference_flow = estimate_flow(input_normals[i - 1], input_normals[i], flow_params)
        estimated_flow = estimate_flow(decoded[i - 1], decoded[i], flow_params)
        f_errors.append(
            rmse(Image(data=reference_flow.vectors), Image(data=estimated_flow.vectors)),
        )

    report = MetricReport(
        n_rmse=float(np.mean(n_errors)),
        n_psnr=_average_psnr(n_errors, NORMAL_PEAK),
        f_rmse=float(np.mean(f_errors)) if f_errors else None,
        f_psnr=_average_psnr(f_errors, flow_peak) if f_errors else None,
        normal_peak=NORMAL_PEAK,
        flow_peak=flow_peak,
    )
    logger.info("Normal-condition metrics", extra=report.model_dump(exclude_none=True))
    return report


def temporal_variance(
    frames: FrameSequence | Sequence[Image],
    region: np.ndarray | None = None,
) -> float:
    """Mean per-pixel variance across frames, over ``region`` and all channels.

    Args:
        frames: Equally sized images.
        region: Optional boolean ``(height, width)`` selection; defaults to
            every pixel.

    Raises:
        InvalidParameterError: No frames or an empty region.
        ShapeMismatchError: Frames or region disagree in size.
    """
    images = _frames_of(frames)
    if not images:
        raise InvalidParameterError("temporal variance of an empty sequence")
    shape = images[0].data.shape
    if any(img.data.shape != shape for img in images):
        raise ShapeMismatchError("frames differ in shape")
    variance = np.stack([img.data for img in images]).var(axis=0)
    if region is None:
        return float(variance.mean())
    region = np.asarray(region, dtype=bool)
    if region.shape != shape[:2]:
        raise ShapeMismatchError(f"region {region.shape} does not match frames {shape[:2]}")
    if not region.any():
        raise InvalidParameterError("region selects no pixels")
    return float(variance[region].mean())


__all__ = [
    "DEFAULT_K",
    "anchor_indices",
    "normal_condition_metrics",
    "self_ssim",
    "temporal_variance",
]
