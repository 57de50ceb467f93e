"""Backward bilinear warping of fields along a flow.

``output(x, y) = field(x + u(x, y), y + v(x, y))`` sampled bilinearly with
edge clamping: sample coordinates are clipped to the image before
interpolation, so nothing outside the field leaks in.
"""

from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import field_validator
from scipy import ndimage

from ..errors import ShapeMismatchError
from ..flow.types import FlowField
from ..imaging.types import ArrayModel, frozen_array


class ScalarField(ArrayModel):
    """A single-channel ``(height, width)`` field of finite scalars."""

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError(f"scalar field must be (H, W), got shape {array.shape}")
        if not np.isfinite(array).all():
            raise ValueError("scalar field values must be finite")
        return frozen_array(array)

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.values.shape[0]), int(self.values.shape[1])


def sample_grid(f: FlowField) -> tuple[np.ndarray, np.ndarray]:
    """Clamped ``(rows, cols)`` sample coordinates of a backward warp."""
    height, width = f.shape
    rows = np.arange(height, dtype=np.float64)[:, None] + f.v
    cols = np.arange(width, dtype=np.float64)[None, :] + f.u
    return np.clip(rows, 0.0, height - 1.0), np.clip(cols, 0.0, width - 1.0)


def bilinear_warp(field: ScalarField, f: FlowField) -> ScalarField:
    """Backward-warp a scalar field by a flow.

    Args:
        field: Field to sample (e.g. one channel of the previous frame's
            attention).
        f: Flow with the same dimensions as ``field``.

    Returns:
        The warped field; the zero flow returns the input values unchanged.

    Raises:
        ShapeMismatchError: ``field`` and ``f`` differ in size.

    Example:
        >>> ramp = ScalarField(values=np.tile(np.arange(4.0), (3, 1)))
        >>> bilinear_warp(ramp, FlowField.constant(4, 3, 0.5, 0.0)).values[1, 1]
        1.5
    """
    if field.shape != f.shape:
        raise ShapeMismatchError(f"field {field.shape} and flow {f.shape} differ")
    if f.is_zero():
        return ScalarField(values=field.values)
    rows, cols = sample_grid(f)
    warped = ndimage.map_coordinates(field.values, [rows, cols], order=1, mode="nearest")
    return ScalarField(values=warped)


def warp_channels(array: np.ndarray, f: FlowField) -> np.ndarray:
    """Backward-warp every channel of an ``(H, W, C)`` array at once.

    Equivalent to :func:`bilinear_warp` applied per channel: the four
    neighbours of every sample are gathered once for all channels. Floating
    inputs keep their dtype; integer inputs are promoted to float64.

    Raises:
        ShapeMismatchError: The spatial size differs from the flow.
    """
    array = np.asarray(array)
    if array.ndim != 3 or array.shape[:2] != f.shape:
        raise ShapeMismatchError(f"array {array.shape} does not match flow {f.shape}")
    if not np.issubdtype(array.dtype, np.floating):
        array = array.astype(np.float64)
    if f.is_zero():
        return array.copy()
    height, width = f.shape
    rows, cols = sample_grid(f)
    r0 = np.floor(rows).astype(np.intp)
    c0 = np.floor(cols).astype(np.intp)
    r1 = np.minimum(r0 + 1, height - 1)
    c1 = np.minimum(c0 + 1, width - 1)
    fy = (rows - r0).astype(array.dtype)[:, :, None]
    fx = (cols - c0).astype(array.dtype)[:, :, None]
    top = array[r0, c0] * (1 - fx) + array[r0, c1] * fx
    bottom = array[r1, c0] * (1 - fx) + array[r1, c1] * fx
    return top * (1 - fy) + bottom * fy


__all__ = ["ScalarField", "bilinear_warp", "sample_grid", "warp_channels"]
