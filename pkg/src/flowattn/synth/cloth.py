"""Procedural "cloth in the wind" normal-map sequences with analytic flow.

Inside an axis-aligned cloth region the surface is a traveling sinusoidal
height field

    h(x, y, i) = A * sin(2 * pi * k * (x - c * i) / W + phi0)

where ``c`` is the phase velocity in pixels per frame and ``phi0`` a
seed-derived phase offset. Its normals are the analytic gradient normals
``normalize(-dh/dx, -dh/dy, 1)``. Outside the region the surface is flat,
``(0, 0, 1)``, which gives the zero-flow background the attention
correction relies on.
"""

from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..flow.types import FlowField
from ..imaging.types import NormalMap, normalize_vectors


logger = logging.getLogger(__name__)


class Region(BaseModel):
    """Half-open pixel rectangle ``[x0, x1) x [y0, y1)``."""

    x0: int
    y0: int
    x1: int
    y1: int

    @model_validator(mode="after")
    def _check_order(self) -> Region:
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise ValueError(f"empty region {self}")
        return self

    def contains_mask(self, width: int, height: int) -> np.ndarray:
        """Boolean ``(height, width)`` map of the pixels inside the region."""
        inside = np.zeros((height, width), dtype=bool)
        inside[self.y0 : self.y1, self.x0 : self.x1] = True
        return inside


class ClothSceneParams(BaseModel):
    """Parameters of a synthetic wind-blown cloth sequence.

    Attributes:
        width: Image width in pixels.
        height: Image height in pixels.
        frames: Number of frames N (>= 2).
        wave_amplitude: Height-field amplitude A in pixel units.
        wave_count: Number of wave periods k across the image width.
        phase_velocity: Wave speed c in pixels per frame.
        cloth_region: Region holding the cloth; defaults to the central half.
        seed: Seed of the phase offset.
    """

    width: int = Field(default=128, ge=4)
    height: int = Field(default=128, ge=4)
    frames: int = Field(default=8, ge=2)
    wave_amplitude: float = 4.0
    wave_count: float = 2.0
    phase_velocity: float = 1.0
    cloth_region: Region | None = None
    seed: int = 0

    @model_validator(mode="after")
    def _check_region(self) -> ClothSceneParams:
        r = self.region
        if not (0 < r.x0 < r.x1 < self.width and 0 < r.y0 < r.y1 < self.height):
            raise ValueError(f"cloth region {r} must lie strictly inside {self.width}x{self.height}")
        return self

    @property
    def region(self) -> Region:
        if self.cloth_region is not None:
            return self.cloth_region
        return Region(
            x0=self.width // 4,
            y0=self.height // 4,
            x1=self.width - self.width // 4,
            y1=self.height - self.height // 4,
        )


def _phase_offset(seed: int) -> float:
    return float(np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi))


def cloth_normals(params: ClothSceneParams, frame: int) -> NormalMap:
    """Normals of frame ``frame`` of the scene."""
    width, height = params.width, params.height
    region = params.region
    xs = np.arange(width, dtype=np.float64)
    omega = 2.0 * np.pi * params.wave_count / width
    theta = omega * (xs - params.phase_velocity * frame) + _phase_offset(params.seed)
    slope = params.wave_amplitude * omega * np.cos(theta)

    vectors = np.zeros((height, width, 3))
    vectors[:, :, 2] = 1.0
    inside = region.contains_mask(width, height)
    vectors[:, :, 0] = np.where(inside, -slope[None, :], 0.0)
    return NormalMap(normals=normalize_vectors(vectors))


def cloth_flow(params: ClothSceneParams, frame: int) -> FlowField:
    """Ground-truth flow taking frame ``frame - 1`` to frame ``frame``.

    Frame 0 has no predecessor and gets the zero field, as do static
    (zero velocity) and flat (zero amplitude) scenes.
    """
    vectors = np.zeros((params.height, params.width, 2))
    moving = frame > 0 and params.wave_amplitude != 0.0 and params.phase_velocity != 0.0
    if moving:
        inside = params.region.contains_mask(params.width, params.height)
        vectors[inside, 0] = params.phase_velocity
    return FlowField(vectors=vectors)


def gen_cloth_sequence(params: ClothSceneParams) -> tuple[list[NormalMap], list[FlowField]]:
    """Generate the normal maps and ground-truth flows of a cloth scene.

    Args:
        params: Scene description.

    Returns:
        ``(normals, flows)``, both of length ``params.frames``; ``flows[i]``
        maps frame ``i - 1`` to frame ``i`` and ``flows[0]`` is zero.

    Example:
        >>> normals, flows = gen_cloth_sequence(ClothSceneParams(frames=4))
        >>> flows[1].vectors[64, 64]
        array([1., 0.])
    """
    logger.info(
        "Generating cloth sequence",
        extra={"frames": params.frames, "size": [params.width, params.height], "seed": params.seed},
    )
    normals = [cloth_normals(params, i) for i in range(params.frames)]
    flows = [cloth_flow(params, i) for i in range(params.frames)]
    return normals, flows


def background_region(params: ClothSceneParams, margin: int = 0) -> np.ndarray:
    """Pixels at least ``margin`` pixels away from the cloth region."""
    r = params.region
    grown = Region(
        x0=max(r.x0 - margin, 0),
        y0=max(r.y0 - margin, 0),
        x1=min(r.x1 + margin, params.width),
        y1=min(r.y1 + margin, params.height),
    )
    return ~grown.contains_mask(params.width, params.height)


__all__ = [
    "ClothSceneParams",
    "Region",
    "background_region",
    "cloth_flow",
    "cloth_normals",
    "gen_cloth_sequence",
]
