"""First-principal-component heatmaps of attention tensors.

Each spatial location of an ``(H, W, C)`` attention tensor is one
``C``-dimensional sample. The dominant eigenvector of the channel
covariance is found by power iteration, every location is projected onto
it and the projection is min-max normalized into a heatmap. Comparing the
heatmaps of consecutive frames shows how much the attention drifts.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import Any, Literal

import matplotlib as mpl
import numpy as np
from pydantic import Field, field_validator

from ..attention.types import AttentionTensor
from ..errors import InvalidParameterError
from ..imaging.types import ArrayModel, Image, frozen_array


logger = logging.getLogger(__name__)

POWER_TOLERANCE = 1e-8
POWER_MAX_ITER = 1000
POWER_SEED = 0
DEFAULT_COLORMAP = "viridis"


class Heatmap(ArrayModel):
    """A ``[0, 1]`` scalar map with rendering metadata.

    Attributes:
        values: ``(height, width)`` array in ``[0, 1]``.
        colormap: Matplotlib colormap name used by :func:`heatmap_to_image`.
        explained_variance: Share of the total channel variance carried by
            the component shown.
        degenerate: The source tensor had no spatial variation.
        low_signal: The component barely dominates the others.
    """

    values: np.ndarray
    colormap: str = DEFAULT_COLORMAP
    explained_variance: float = Field(default=0.0, ge=0.0)
    degenerate: bool = False
    low_signal: bool = False

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim != 2:
            raise ValueError(f"heatmap must be (H, W), got shape {array.shape}")
        if not np.isfinite(array).all() or array.min() < 0.0 or array.max() > 1.0:
            raise ValueError("heatmap values must lie in [0, 1]")
        return frozen_array(array)

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])


def dominant_eigenvector(
    matrix: np.ndarray,
    tol: float = POWER_TOLERANCE,
    max_iter: int = POWER_MAX_ITER,
    seed: int = POWER_SEED,
) -> tuple[np.ndarray, float]:
    """Power iteration on a symmetric positive semi-definite matrix.

    Returns:
        ``(unit eigenvector, eigenvalue)``.
    """
    vector = np.random.default_rng(seed).standard_normal(matrix.shape[0])
    vector /= np.linalg.norm(vector)
    for iteration in range(1, max_iter + 1):
        product = matrix @ vector
        norm = np.linalg.norm(product)
        if norm == 0.0:
            return vector, 0.0
        candidate = product / norm
        step = np.linalg.norm(candidate - vector)
        vector = candidate
        if step <= tol:
            logger.debug("Power iteration converged after %d iterations", iteration)
            break
    else:
        logger.debug("Power iteration stopped after %d iterations", max_iter)
    return vector, float(vector @ matrix @ vector)


class _Projection:
    __slots__ = ("degenerate", "explained", "values")

    def __init__(self, values: np.ndarray, explained: float, degenerate: bool) -> None:
        self.values = values
        self.explained = explained
        self.degenerate = degenerate


def _project(a: AttentionTensor) -> _Projection:
    if a.channels < 2:
        raise InvalidParameterError(f"PCA needs at least 2 channels, got {a.channels}")
    samples = a.data.reshape(-1, a.channels).astype(np.float64)
    centered = samples - samples.mean(axis=0)
    covariance = centered.T @ centered / samples.shape[0]
    total = float(np.trace(covariance))
    if total <= 0.0:
        return _Projection(np.zeros((a.height, a.width)), 0.0, degenerate=True)

    component, eigenvalue = dominant_eigenvector(covariance)
    projection = samples @ component
    mean = float(projection.mean())
    if mean < 0.0 or (mean == 0.0 and component[np.argmax(np.abs(component))] < 0.0):
        projection = -projection
    return _Projection(projection.reshape(a.height, a.width), eigenvalue / total, degenerate=False)


def _heatmap(projection: _Projection, lo: float, hi: float, channels: int, colormap: str) -> Heatmap:
    if projection.degenerate or hi <= lo:
        return Heatmap(
            values=np.full(projection.values.shape, 0.5),
            colormap=colormap,
            degenerate=True,
        )
    values = np.clip((projection.values - lo) / (hi - lo), 0.0, 1.0)
    low_signal = projection.explained < min(3.0 / channels, 0.5)
    if low_signal:
        logger.warning(
            "First component explains only %.3f of the attention variance", projection.explained,
        )
    return Heatmap(
        values=values,
        colormap=colormap,
        explained_variance=min(max(projection.explained, 0.0), 1.0),
        low_signal=low_signal,
    )


def pca_first_component(a: AttentionTensor, colormap: str = DEFAULT_COLORMAP) -> Heatmap:
    """Heatmap of the dominant principal component of an attention tensor.

    The covariance is taken over mean-centered locations; the projection
    uses the raw samples and its sign is chosen so its spatial mean is
    non-negative (ties: the largest-magnitude loading is positive). A
    tensor without spatial variation yields a flat 0.5 map flagged
    ``degenerate``.

    Raises:
        InvalidParameterError: Fewer than two channels.

    Example:
        >>> heat = pca_first_component(AttentionTensor(data=np.random.rand(8, 8, 4)))
        >>> 0.0 <= heat.values.min() <= heat.values.max() <= 1.0
        True
    """
    projection = _project(a)
    lo, hi = float(projection.values.min()), float(projection.values.max())
    return _heatmap(projection, lo, hi, a.channels, colormap)


def pca_heatmaps(
    tensors: Sequence[AttentionTensor],
    normalize: Literal["frame", "sequence"] = "frame",
    colormap: str = DEFAULT_COLORMAP,
) -> list[Heatmap]:
    """Heatmaps for a sequence of tensors.

    Args:
        tensors: One attention tensor per frame.
        normalize: ``"frame"`` min-max normalizes each heatmap on its own;
            ``"sequence"`` uses one range for the whole sequence so
            brightness is comparable across frames.
        colormap: Matplotlib colormap name.
    """
    if normalize not in ("frame", "sequence"):
        raise InvalidParameterError(f"unknown normalization {normalize!r}")
    projections = [_project(t) for t in tensors]
    if normalize == "frame":
        return [
            _heatmap(p, float(p.values.min()), float(p.values.max()), t.channels, colormap)
            for p, t in zip(projections, tensors, strict=True)
        ]
    live = [p.values for p in projections if not p.degenerate]
    lo = min((float(v.min()) for v in live), default=0.0)
    hi = max((float(v.max()) for v in live), default=0.0)
    return [_heatmap(p, lo, hi, t.channels, colormap) for p, t in zip(projections, tensors, strict=True)]


def heatmap_to_image(heatmap: Heatmap) -> Image:
    """Render a heatmap to RGB with its matplotlib colormap."""
    try:
        cmap = mpl.colormaps[heatmap.colormap]
    except KeyError as e:
        raise InvalidParameterError(f"unknown colormap {heatmap.colormap!r}") from e
    return Image(data=cmap(heatmap.values)[:, :, :3])


__all__ = [
    "Heatmap",
    "dominant_eigenvector",
    "heatmap_to_image",
    "pca_first_component",
    "pca_heatmaps",
]
