"""Motion masks obtained by thresholding a flow."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError
from .types import BinaryMask, FlowField


DEFAULT_THRESHOLD = 0.5


def compute_mask(f: FlowField, threshold: float = DEFAULT_THRESHOLD) -> BinaryMask:
    """Mark pixels whose flow magnitude reaches ``threshold``.

    ``mask(x, y) = 1`` iff ``||(u, v)(x, y)||_2 >= threshold``. The boundary
    is inclusive, so a threshold of 0 yields an all-ones mask.

    Args:
        f: Flow at any resolution.
        threshold: Magnitude threshold in pixels, ``>= 0``.

    Raises:
        InvalidParameterError: ``threshold`` is negative or not finite.
    """
    if not np.isfinite(threshold) or threshold < 0:
        raise InvalidParameterError(f"threshold must be a finite value >= 0, got {threshold}")
    return BinaryMask(values=(f.magnitude() >= threshold).astype(np.uint8))


def mask_to_array(m: BinaryMask) -> np.ndarray:
    """Float ``(H, W, 1)`` view of a mask for broadcasting against tensors."""
    return m.values.astype(np.float64)[:, :, None]


__all__ = ["DEFAULT_THRESHOLD", "compute_mask", "mask_to_array"]
