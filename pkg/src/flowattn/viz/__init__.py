"""Attention PCA heatmaps and flow coloring."""

from __future__ import annotations

from .flow_color import flow_to_color
from .pca import (
    Heatmap,
    dominant_eigenvector,
    heatmap_to_image,
    pca_first_component,
    pca_heatmaps,
)


__all__ = [
    "Heatmap",
    "dominant_eigenvector",
    "flow_to_color",
    "heatmap_to_image",
    "pca_first_component",
    "pca_heatmaps",
]
