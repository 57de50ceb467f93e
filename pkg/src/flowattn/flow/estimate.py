"""Dense optical flow on normal maps.

The three normal components are treated as intensity channels of an RGB
image and fed to a coarse-to-fine iterative Lucas-Kanade solver:

* a Gaussian pyramid is built for both maps;
* at each level, the second map is backward-warped by the current flow,
  per-channel structure tensors are summed over channels and aggregated in
  a Gaussian window, and the damped 2x2 normal equations are solved for an
  increment;
* the flow is upsampled (with displacement rescaling) to the next level.

Pixels whose window contains no gradient energy carry zero flow: a flat
background of constant normals never picks up displacement leaking from
coarser levels.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import ndimage
from skimage.transform import pyramid_gaussian

from ..errors import ShapeMismatchError
from ..imaging.types import NormalMap
from ..warp.bilinear import warp_channels
from ..warp.resample import resample_flow
from .types import FlowField, FlowParams


logger = logging.getLogger(__name__)

TEXTURE_EPS = 1e-12
DET_EPS = 1e-18
# Per-iteration increment bound in pixels of the current level.
MAX_STEP = 1.0


def _pyramid(image: np.ndarray, levels: int) -> list[np.ndarray]:
    return list(
        pyramid_gaussian(
            image,
            max_layer=levels - 1,
            downscale=2,
            channel_axis=-1,
            preserve_range=True,
        ),
    )


def _spatial_gradients(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if image.shape[0] < 2 or image.shape[1] < 2:
        return np.zeros_like(image), np.zeros_like(image)
    grad_y, grad_x = np.gradient(image, axis=(0, 1))
    return grad_x, grad_y


def _lucas_kanade_step(
    img_a: np.ndarray,
    img_b: np.ndarray,
    grad_a: tuple[np.ndarray, np.ndarray],
    flow: np.ndarray,
    params: FlowParams,
) -> np.ndarray:
    warped = warp_channels(img_b, FlowField(vectors=flow))
    grad_wx, grad_wy = _spatial_gradients(warped)
    Ix = 0.5 * (grad_a[0] + grad_wx)
    Iy = 0.5 * (grad_a[1] + grad_wy)
    It = warped - img_a

    def window(product: np.ndarray) -> np.ndarray:
        return ndimage.gaussian_filter(product.sum(axis=2), params.window_sigma, mode="nearest")

    Jxx = window(Ix * Ix)
    Jyy = window(Iy * Iy)
    Jxy = window(Ix * Iy)
    Jxt = window(Ix * It)
    Jyt = window(Iy * It)

    trace = Jxx + Jyy
    textured = trace > TEXTURE_EPS
    damping = params.smoothness_weight * float(trace[textured].mean()) if textured.any() else 0.0
    a11 = Jxx + damping
    a22 = Jyy + damping
    det = a11 * a22 - Jxy * Jxy
    solvable = textured & (det > DET_EPS)
    safe_det = np.where(solvable, det, 1.0)

    du = np.where(solvable, -(a22 * Jxt - Jxy * Jyt) / safe_det, 0.0)
    dv = np.where(solvable, -(a11 * Jyt - Jxy * Jxt) / safe_det, 0.0)
    step = np.stack([du, dv], axis=-1)
    updated = flow + np.clip(step, -MAX_STEP, MAX_STEP)
    updated[~textured] = 0.0
    return updated


def estimate_flow(a: NormalMap, b: NormalMap, params: FlowParams | None = None) -> FlowField:
    """Estimate the flow taking pixels of ``a`` to their position in ``b``.

    Args:
        a: Normal map of the earlier frame.
        b: Normal map of the later frame, same size as ``a``.
        params: Estimator parameters; defaults to :class:`FlowParams`.

    Returns:
        Flow with the dimensions of the inputs; ``b(x + f(x)) ~ a(x)``.

    Raises:
        ShapeMismatchError: ``a`` and ``b`` differ in size.

    Example:
        >>> frames, truth = gen_translation_sequence(base, (2.0, 0.0), 2)
        >>> estimate_flow(frames[0], frames[1]).vectors[32, 32]
        array([2., 0.])  # approximately
    """
    if a.shape != b.shape:
        raise ShapeMismatchError(f"normal maps differ in size: {a.shape} vs {b.shape}")
    params = params or FlowParams()

    pyramid_a = _pyramid(a.normals, params.pyramid_levels)
    pyramid_b = _pyramid(b.normals, params.pyramid_levels)
    levels = min(len(pyramid_a), len(pyramid_b))

    coarsest = pyramid_a[levels - 1]
    flow = np.zeros((*coarsest.shape[:2], 2))
    for level in range(levels - 1, -1, -1):
        img_a = pyramid_a[level]
        img_b = pyramid_b[level]
        height, width = img_a.shape[:2]
        if flow.shape[:2] != (height, width):
            flow = resample_flow(FlowField(vectors=flow), width, height).vectors.copy()
        grad_a = _spatial_gradients(img_a)
        for _ in range(params.iterations_per_level):
            flow = _lucas_kanade_step(img_a, img_b, grad_a, flow, params)
        logger.debug(
            "flow level %d (%dx%d): mean |f| = %.4f",
            level,
            width,
            height,
            float(np.hypot(flow[..., 0], flow[..., 1]).mean()),
        )
    return FlowField(vectors=flow)


def endpoint_error(
    estimated: FlowField,
    truth: FlowField,
    region: np.ndarray | None = None,
) -> float:
    """Mean Euclidean distance between two flows, optionally over a boolean region."""
    if estimated.shape != truth.shape:
        raise ShapeMismatchError(f"flows differ in size: {estimated.shape} vs {truth.shape}")
    errors = np.hypot(*(estimated.vectors - truth.vectors).transpose(2, 0, 1))
    if region is not None:
        errors = errors[np.asarray(region, dtype=bool)]
    return float(errors.mean())


__all__ = ["endpoint_error", "estimate_flow"]
