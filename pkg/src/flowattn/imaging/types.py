"""Raster value types shared by every flowattn module.

The types are frozen pydantic models wrapping a numpy array. Validation
coerces the array to ``float64``, checks the invariants from the domain
model and marks the array read-only, so instances can be shared freely
between frames and threads.

License:
    Apache 2.0
"""

from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


# Tolerance on |n| after decoding; decoded normals are renormalized so
# anything outside this band is a construction error.
NORMAL_NORM_TOLERANCE = 1e-3

UP_NORMAL = np.array([0.0, 0.0, 1.0])


def frozen_array(value: Any, dtype: type = np.float64) -> np.ndarray:
    """Return a read-only, C-contiguous copy of ``value`` with ``dtype``."""
    array = np.array(value, dtype=dtype, copy=True, order="C")
    array.setflags(write=False)
    return array


class ArrayModel(BaseModel):
    """Base for immutable numpy-backed models."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class Image(ArrayModel):
    """A row-major raster with 1, 2 or 3 channels.

    Attributes:
        data: ``(height, width, channels)`` array. Frames and heatmaps use
            the ``[0, 1]`` range; other encodings declare their own.

    Example:
        >>> img = Image(data=np.zeros((4, 6, 3)))
        >>> (img.width, img.height, img.channels)
        (6, 4, 3)
    """

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def _check_data(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim == 2:
            array = array[:, :, None]
        if array.ndim != 3:
            raise ValueError(f"image data must be (H, W, C), got shape {array.shape}")
        height, width, channels = array.shape
        if height < 1 or width < 1:
            raise ValueError(f"image must be at least 1x1, got {width}x{height}")
        if channels not in (1, 2, 3):
            raise ValueError(f"image channels must be 1, 2 or 3, got {channels}")
        return frozen_array(array)

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])


def normalize_vectors(vectors: np.ndarray) -> np.ndarray:
    """Scale 3-vectors to unit length; zero-length vectors become ``(0, 0, 1)``."""
    vectors = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    degenerate = norms[..., 0] == 0.0
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = vectors / safe
    unit[degenerate] = UP_NORMAL
    return unit


class NormalMap(ArrayModel):
    """Per-pixel unit surface normals, the conditioning signal of a frame.

    Attributes:
        normals: ``(height, width, 3)`` array of unit vectors in ``[-1, 1]^3``.
    """

    normals: np.ndarray

    @field_validator("normals", mode="before")
    @classmethod
    def _check_normals(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim != 3 or array.shape[2] != 3:
            raise ValueError(f"normals must be (H, W, 3), got shape {array.shape}")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError("normal map must be at least 1x1")
        if not np.isfinite(array).all():
            raise ValueError("normals must be finite")
        norms = np.linalg.norm(array, axis=-1)
        if np.abs(norms - 1.0).max() > NORMAL_NORM_TOLERANCE:
            raise ValueError("normals must have unit length (use NormalMap.from_vectors)")
        return frozen_array(array)

    @classmethod
    def from_vectors(cls, vectors: np.ndarray) -> NormalMap:
        """Build a map from arbitrary vectors, renormalizing each pixel."""
        return cls(normals=normalize_vectors(vectors))

    @classmethod
    def flat(cls, width: int, height: int) -> NormalMap:
        """A map where every pixel faces the viewer, ``(0, 0, 1)``."""
        return cls(normals=np.broadcast_to(UP_NORMAL, (height, width, 3)))

    @property
    def width(self) -> int:
        return int(self.normals.shape[1])

    @property
    def height(self) -> int:
        return int(self.normals.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        """``(height, width)``."""
        return self.height, self.width


def encode_normals(normal_map: NormalMap) -> np.ndarray:
    """Encode normals to the 8-bit ``rgb = round((n + 1) / 2 * 255)`` convention."""
    scaled = np.rint((normal_map.normals + 1.0) * 0.5 * 255.0)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def decode_normals(rgb: np.ndarray) -> NormalMap:
    """Decode 8-bit RGB with ``n = 2 * rgb / 255 - 1`` and renormalize."""
    vectors = 2.0 * (np.asarray(rgb, dtype=np.float64) / 255.0) - 1.0
    return NormalMap.from_vectors(vectors)


def normals_to_image(normal_map: NormalMap) -> Image:
    """View a normal map as a ``[0, 1]`` RGB image in the standard encoding."""
    return Image(data=encode_normals(normal_map) / 255.0)


__all__ = [
    "NORMAL_NORM_TOLERANCE",
    "ArrayModel",
    "Image",
    "NormalMap",
    "decode_normals",
    "encode_normals",
    "frozen_array",
    "normalize_vectors",
    "normals_to_image",
]
