"""Resolution adaptation between image-resolution and attention-resolution grids.

Flows and masks are computed on full-size normal maps while the hooked
attention lives on a much coarser grid. Downsampling is an area average
(exact block mean when the sizes divide), upsampling is bilinear; flow
displacements are rescaled so they stay in target-pixel units.
"""

from __future__ import annotations

import numpy as np
from skimage.transform import downscale_local_mean, resize

from ..errors import InvalidParameterError
from ..flow.types import BinaryMask, FlowField


def _check_target(target_w: int, target_h: int) -> None:
    if target_w < 1 or target_h < 1:
        raise InvalidParameterError(f"target size must be >= 1, got {target_w}x{target_h}")


def _area_weights(source: int, target: int) -> np.ndarray:
    """``(target, source)`` overlap fractions of each target cell with each source cell."""
    ratio = source / target
    edges = np.arange(target + 1, dtype=np.float64) * ratio
    cells = np.arange(source, dtype=np.float64)[None, :]
    overlap = np.minimum(edges[1:, None], cells + 1.0) - np.maximum(edges[:-1, None], cells)
    return np.clip(overlap, 0.0, None) / ratio


def _area_shrink(array: np.ndarray, axis: int, target: int) -> np.ndarray:
    weights = _area_weights(array.shape[axis], target)
    return np.moveaxis(np.tensordot(weights, array, axes=([1], [axis])), 0, axis)


def resize_bilinear(array: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Resize an ``(H, W, C)`` array to ``(target_h, target_w, C)``.

    Shrinking axes are area-averaged (the exact block mean when the factor
    is integral), enlarging axes are interpolated bilinearly. The output
    keeps the input dtype.
    """
    _check_target(target_w, target_h)
    array = np.asarray(array)
    height, width = array.shape[:2]
    if (height, width) == (target_h, target_w):
        return array.copy()
    if (
        target_h <= height
        and target_w <= width
        and height % target_h == 0
        and width % target_w == 0
    ):
        factors = (height // target_h, width // target_w) + (1,) * (array.ndim - 2)
        return downscale_local_mean(array, factors).astype(array.dtype, copy=False)
    resized = array.astype(np.float64)
    if target_h < height:
        resized = _area_shrink(resized, 0, target_h)
    if target_w < width:
        resized = _area_shrink(resized, 1, target_w)
    if target_h > height or target_w > width:
        resized = resize(
            resized,
            (target_h, target_w, *array.shape[2:]),
            order=1,
            mode="edge",
            anti_aliasing=False,
            preserve_range=True,
        )
    return resized.astype(array.dtype, copy=False)


def resample_flow(f: FlowField, target_w: int, target_h: int) -> FlowField:
    """Resample a flow to another grid, rescaling the displacements.

    ``u`` is scaled by ``target_w / width`` and ``v`` by
    ``target_h / height``.

    Example:
        >>> coarse = resample_flow(FlowField.constant(512, 512, 8.0, 0.0), 64, 64)
        >>> coarse.vectors[0, 0]
        array([1., 0.])
    """
    _check_target(target_w, target_h)
    if f.shape == (target_h, target_w):
        return FlowField(vectors=f.vectors)
    vectors = resize_bilinear(f.vectors, target_w, target_h)
    vectors[:, :, 0] *= target_w / f.width
    vectors[:, :, 1] *= target_h / f.height
    return FlowField(vectors=vectors)


def resample_mask(m: BinaryMask, target_w: int, target_h: int) -> BinaryMask:
    """Area-average a mask to another grid and re-binarize at 0.5.

    Ties (exactly half the area moving) round to 1 so motion is preserved.
    """
    _check_target(target_w, target_h)
    if m.shape == (target_h, target_w):
        return BinaryMask(values=m.values)
    coverage = resize_bilinear(m.values.astype(np.float64)[:, :, None], target_w, target_h)
    return BinaryMask(values=(coverage[:, :, 0] >= 0.5).astype(np.uint8))


__all__ = ["resample_flow", "resample_mask", "resize_bilinear"]
