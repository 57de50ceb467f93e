"""Polar flow coloring: hue encodes direction, saturation encodes speed."""

from __future__ import annotations

import numpy as np
from skimage.color import hsv2rgb

from ..flow.types import FlowField
from ..imaging.types import Image


SATURATION_PERCENTILE = 95.0


def flow_to_color(f: FlowField) -> Image:
    """Render a flow field as an RGB image.

    Hue is ``atan2(v, u) / (2 * pi)`` wrapped into ``[0, 1)``; saturation is
    the magnitude divided by the 95th-percentile magnitude, clipped to 1;
    value is always 1, so zero flow renders white.

    Example:
        >>> flow_to_color(FlowField.zeros(4, 4)).data.min()
        1.0
    """
    magnitude = f.magnitude()
    scale = float(np.percentile(magnitude, SATURATION_PERCENTILE))
    if scale <= 0.0:
        scale = float(magnitude.max())
    hsv = np.empty((*f.shape, 3))
    hsv[:, :, 0] = np.mod(np.arctan2(f.v, f.u) / (2.0 * np.pi), 1.0)
    hsv[:, :, 1] = np.clip(magnitude / scale, 0.0, 1.0) if scale > 0.0 else 0.0
    hsv[:, :, 2] = 1.0
    return Image(data=np.clip(hsv2rgb(hsv), 0.0, 1.0))


__all__ = ["flow_to_color"]
