"""Flow, mask and estimator-parameter types."""

from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import BaseModel, Field, field_validator

from ..imaging.types import ArrayModel, frozen_array


class FlowField(ArrayModel):
    """Per-pixel ``(u, v)`` displacement in pixels.

    ``u`` is horizontal (+x to the right), ``v`` vertical (+y down). A field
    attached to frame ``i`` conventionally holds the displacement taking
    pixels of frame ``i-1`` to frame ``i``.

    Attributes:
        vectors: ``(height, width, 2)`` finite array.
    """

    vectors: np.ndarray

    @field_validator("vectors", mode="before")
    @classmethod
    def _check_vectors(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim != 3 or array.shape[2] != 2:
            raise ValueError(f"flow must be (H, W, 2), got shape {array.shape}")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError("flow must be at least 1x1")
        if not np.isfinite(array).all():
            raise ValueError("flow components must be finite")
        return frozen_array(array)

    @classmethod
    def zeros(cls, width: int, height: int) -> FlowField:
        return cls(vectors=np.zeros((height, width, 2)))

    @classmethod
    def constant(cls, width: int, height: int, u: float, v: float) -> FlowField:
        return cls(vectors=np.broadcast_to(np.array([u, v], dtype=np.float64), (height, width, 2)))

    @property
    def width(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def height(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    @property
    def u(self) -> np.ndarray:
        return self.vectors[:, :, 0]

    @property
    def v(self) -> np.ndarray:
        return self.vectors[:, :, 1]

    def magnitude(self) -> np.ndarray:
        """Per-pixel L2 norm of the displacement."""
        return np.hypot(self.u, self.v)

    def negated(self) -> FlowField:
        return FlowField(vectors=-self.vectors)

    def is_zero(self) -> bool:
        return not self.vectors.any()


class BinaryMask(ArrayModel):
    """Per-pixel motion mask with values exactly 0 or 1.

    Attributes:
        values: ``(height, width)`` ``uint8`` array.
    """

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, value: Any) -> np.ndarray:
        array = np.asarray(value)
        if array.ndim != 2:
            raise ValueError(f"mask must be (H, W), got shape {array.shape}")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError("mask must be at least 1x1")
        if not np.isin(array, (0, 1)).all():
            raise ValueError("mask values must be exactly 0 or 1")
        return frozen_array(array, dtype=np.uint8)

    @classmethod
    def full(cls, width: int, height: int, value: int) -> BinaryMask:
        return cls(values=np.full((height, width), value, dtype=np.uint8))

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width


class FlowParams(BaseModel):
    """Parameters of the pyramidal Lucas-Kanade estimator.

    Attributes:
        pyramid_levels: Number of pyramid levels (1 = full resolution only).
        iterations_per_level: Warp-and-solve iterations at each level.
        smoothness_weight: Tikhonov damping added to the structure tensor
            diagonal, relative to the mean tensor trace of the level.
        window_sigma: Standard deviation of the Gaussian aggregation window.
    """

    pyramid_levels: int = Field(default=3, ge=1)
    iterations_per_level: int = Field(default=10, ge=1)
    smoothness_weight: float = Field(default=0.01, ge=0.0)
    window_sigma: float = Field(default=2.0, gt=0.0)


__all__ = ["BinaryMask", "FlowField", "FlowParams"]
