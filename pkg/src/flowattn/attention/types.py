"""Attention-side value types and the flow-guided attention configuration."""

from __future__ import annotations

import enum
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from ..imaging.types import ArrayModel, frozen_array


def _float_array(value: Any) -> np.ndarray:
    array = np.asarray(value)
    if not np.issubdtype(array.dtype, np.floating):
        array = array.astype(np.float64)
    return array


class AttentionTensor(ArrayModel):
    """Output of one self-attention layer on its spatial grid.

    Attributes:
        data: ``(height, width, channels)`` finite array; float32 or float64.
    """

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def _check_data(cls, value: Any) -> np.ndarray:
        array = _float_array(value)
        if array.ndim != 3 or min(array.shape) < 1:
            raise ValueError(f"attention tensor must be (H, W, C), got shape {array.shape}")
        if not np.isfinite(array).all():
            raise ValueError("attention tensor entries must be finite")
        return frozen_array(array, dtype=array.dtype.type)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.height, self.width, self.channels


class FeatureBlock(ArrayModel):
    """Token-major input features of a self-attention block.

    Attributes:
        data: ``(tokens, dim)`` finite array; zero tokens are allowed.
        grid: Optional ``(height, width)`` of the tokens' spatial layout.
    """

    data: np.ndarray
    grid: tuple[int, int] | None = None

    @field_validator("data", mode="before")
    @classmethod
    def _check_data(cls, value: Any) -> np.ndarray:
        array = _float_array(value)
        if array.ndim != 2 or array.shape[1] < 1:
            raise ValueError(f"feature block must be (tokens, dim), got shape {array.shape}")
        if not np.isfinite(array).all():
            raise ValueError("feature entries must be finite")
        return frozen_array(array, dtype=array.dtype.type)

    @model_validator(mode="after")
    def _check_grid(self) -> FeatureBlock:
        if self.grid is not None and self.grid[0] * self.grid[1] != self.tokens:
            raise ValueError(f"grid {self.grid} does not hold {self.tokens} tokens")
        return self

    @property
    def tokens(self) -> int:
        return int(self.data.shape[0])

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])


class ProjectionSet(ArrayModel):
    """Query, key and value projections of one attention layer.

    Attributes:
        w_q: ``(dim, d)`` query projection.
        w_k: ``(dim, d)`` key projection.
        w_v: ``(dim, d_out)`` value projection.
    """

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray

    @field_validator("w_q", "w_k", "w_v", mode="before")
    @classmethod
    def _check_matrix(cls, value: Any) -> np.ndarray:
        array = _float_array(value)
        if array.ndim != 2 or min(array.shape) < 1:
            raise ValueError(f"projection must be a non-empty matrix, got shape {array.shape}")
        return frozen_array(array, dtype=array.dtype.type)

    @model_validator(mode="after")
    def _check_consistent(self) -> ProjectionSet:
        if not self.w_q.shape[0] == self.w_k.shape[0] == self.w_v.shape[0]:
            raise ValueError("projections must share their input dimension")
        if self.w_q.shape[1] != self.w_k.shape[1]:
            raise ValueError("query and key projections must share their output dimension")
        return self

    @property
    def input_dim(self) -> int:
        return int(self.w_q.shape[0])

    @property
    def key_dim(self) -> int:
        return int(self.w_q.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.w_v.shape[1])


class FlowDirection(str, enum.Enum):
    """Which way the supplied per-frame flows point.

    Attributes:
        forward: Flows take frame ``i-1`` to ``i`` (the ``.flo`` and synth
            convention); they are negated before backward warping.
        backward: Flows take frame ``i`` to ``i-1`` and are used as-is.
    """

    forward = "forward"
    backward = "backward"


class HookSelector(BaseModel):
    """Which attention layer the manipulation acts on; negative indices count from the end."""

    block: int = -1
    layer: int = -1


class FloatConfig(BaseModel):
    """Knobs of flow-guided attention manipulation.

    Attributes:
        alpha: Weight of the current frame's attention against the warped
            previous one.
        threshold: Flow magnitude (pixels, image resolution) at and above
            which a pixel counts as moving.
        inject_fraction: Leading fraction of denoising steps that use
            anchor/previous key-value injection.
        recombine_fraction: Leading fraction of denoising steps that apply
            flow recombination and masked correction (1.0 = every step).
        hook: Manipulated layer.
        flow_direction: Convention of the flows handed to the pipeline.

    Example:
        >>> cfg = FloatConfig(alpha=0.6)
        >>> cfg.inject_steps(20)
        10
    """

    alpha: float = Field(default=0.4, ge=0.0, le=1.0)
    threshold: float = Field(default=0.5, ge=0.0)
    inject_fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    recombine_fraction: float = Field(default=1.0, ge=0.0, le=1.0)
    hook: HookSelector = Field(default_factory=HookSelector)
    flow_direction: FlowDirection = FlowDirection.forward

    def inject_steps(self, steps: int) -> int:
        """Number of leading steps with key-value injection."""
        return round(self.inject_fraction * steps)

    def recombine_steps(self, steps: int) -> int:
        """Number of leading steps with recombination and correction."""
        return round(self.recombine_fraction * steps)


__all__ = [
    "AttentionTensor",
    "FeatureBlock",
    "FloatConfig",
    "FlowDirection",
    "HookSelector",
    "ProjectionSet",
]
