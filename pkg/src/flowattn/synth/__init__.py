"""Synthetic normal-map sequences with analytic ground-truth flow."""

from __future__ import annotations

from .cloth import (
    ClothSceneParams,
    Region,
    background_region,
    cloth_flow,
    cloth_normals,
    gen_cloth_sequence,
)
from .translation import gen_random_normal_map, gen_translation_sequence


__all__ = [
    "ClothSceneParams",
    "Region",
    "background_region",
    "cloth_flow",
    "cloth_normals",
    "gen_cloth_sequence",
    "gen_random_normal_map",
    "gen_translation_sequence",
]
