"""Raster types, normal-map encodings and lossless image I/O."""

from __future__ import annotations

from .io import (
    frame_path,
    list_frames,
    load_image,
    load_image_sequence,
    load_normal_image,
    load_normal_sequence,
    save_image,
    save_normal_image,
    save_sequence,
)
from .types import Image, NormalMap, decode_normals, encode_normals, normals_to_image


__all__ = [
    "Image",
    "NormalMap",
    "decode_normals",
    "encode_normals",
    "frame_path",
    "list_frames",
    "load_image",
    "load_image_sequence",
    "load_normal_image",
    "load_normal_sequence",
    "normals_to_image",
    "save_image",
    "save_normal_image",
    "save_sequence",
]
