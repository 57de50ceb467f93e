"""Rigidly translating normal-map sequences, the flow estimator's calibration target."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import InvalidParameterError
from ..flow.types import FlowField
from ..imaging.types import NormalMap, normalize_vectors


def gen_random_normal_map(
    width: int,
    height: int,
    seed: int = 0,
    smoothness: float = 4.0,
    amplitude: float = 2.0,
) -> NormalMap:
    """Normals of a smooth, periodic random height field.

    White noise is Gaussian-blurred with wrap-around borders and scaled to
    a standard deviation of ``amplitude``; normals come from periodic
    central differences, so the map tiles seamlessly.
    """
    if width < 2 or height < 2:
        raise InvalidParameterError(f"normal map must be at least 2x2, got {width}x{height}")
    rng = np.random.default_rng(seed)
    heights = ndimage.gaussian_filter(rng.standard_normal((height, width)), smoothness, mode="wrap")
    heights *= amplitude / max(float(heights.std()), 1e-12)
    grad_x = 0.5 * (np.roll(heights, -1, axis=1) - np.roll(heights, 1, axis=1))
    grad_y = 0.5 * (np.roll(heights, -1, axis=0) - np.roll(heights, 1, axis=0))
    vectors = np.stack([-grad_x, -grad_y, np.ones_like(heights)], axis=-1)
    return NormalMap(normals=normalize_vectors(vectors))


def _shift(base: NormalMap, dx: float, dy: float) -> NormalMap:
    if float(dx).is_integer() and float(dy).is_integer():
        return NormalMap(normals=np.roll(base.normals, (int(dy), int(dx)), axis=(0, 1)))
    shifted = ndimage.shift(base.normals, (dy, dx, 0.0), order=1, mode="grid-wrap")
    return NormalMap.from_vectors(shifted)


def gen_translation_sequence(
    base: NormalMap,
    velocity: tuple[float, float],
    frames: int,
) -> tuple[list[NormalMap], list[FlowField]]:
    """Translate ``base`` by ``i * velocity`` with periodic boundaries.

    Args:
        base: Frame 0.
        velocity: ``(vx, vy)`` in pixels per frame.
        frames: Number of frames (>= 1).

    Returns:
        ``(normals, flows)``; ``flows[i]`` for ``i >= 1`` is the constant
        velocity field and ``flows[0]`` is zero.

    Raises:
        InvalidParameterError: ``frames < 1`` or the content would wrap
            around more than once over the sequence.
    """
    vx, vy = float(velocity[0]), float(velocity[1])
    if frames < 1:
        raise InvalidParameterError(f"frames must be >= 1, got {frames}")
    if not (np.isfinite(vx) and np.isfinite(vy)):
        raise InvalidParameterError("velocity must be finite")
    if abs(vx) * (frames - 1) > base.width or abs(vy) * (frames - 1) > base.height:
        raise InvalidParameterError(
            f"velocity {velocity} over {frames} frames wraps more than once "
            f"around a {base.width}x{base.height} map",
        )
    normals = [_shift(base, i * vx, i * vy) for i in range(frames)]
    flows = [FlowField.zeros(base.width, base.height)]
    flows += [FlowField.constant(base.width, base.height, vx, vy) for _ in range(1, frames)]
    return normals, flows


__all__ = ["gen_random_normal_map", "gen_translation_sequence"]
