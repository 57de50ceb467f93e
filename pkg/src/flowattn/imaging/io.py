"""Lossless 8-bit raster I/O.

Frames, masks and heatmaps are written as PNG through Pillow; sequences are
directories of zero-padded numbered files (``0000.png``, ``0001.png``...).

License:
    Apache 2.0
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from ..errors import ChannelCountError, CorruptImageError, InputNotFoundError, UnwritablePathError
from .types import Image, NormalMap, decode_normals, normals_to_image


logger = logging.getLogger(__name__)

FRAME_PATTERN = "{index:04d}.png"


def _read_raster(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise InputNotFoundError(f"image not found: {path}")
    try:
        with PILImage.open(path) as handle:
            handle.load()
            mode = handle.mode
            array = np.asarray(handle)
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise CorruptImageError(f"corrupt image {path}: {e}") from e
    if mode not in ("L", "RGB"):
        raise ChannelCountError(f"{path}: unsupported 8-bit mode '{mode}' (need L or RGB)")
    return array


def load_image(path: str | Path) -> Image:
    """Load an 8-bit grayscale or RGB raster as a ``[0, 1]`` image.

    Args:
        path: Raster file to read.

    Returns:
        The decoded image.

    Raises:
        InputNotFoundError: The file does not exist.
        CorruptImageError: Pillow cannot decode the file.
        ChannelCountError: The raster is not 8-bit L or RGB.
    """
    return Image(data=_read_raster(path).astype(np.float64) / 255.0)


def load_normal_image(path: str | Path) -> NormalMap:
    """Load an 8-bit, 3-channel raster and decode it into unit normals.

    Each pixel is decoded as ``n = 2 * rgb / 255 - 1`` and renormalized;
    zero-length pixels map to ``(0, 0, 1)``.

    Args:
        path: Raster file to read.

    Returns:
        The decoded normal map.

    Raises:
        InputNotFoundError: The file does not exist.
        CorruptImageError: Pillow cannot decode the file (e.g. a 0-byte file).
        ChannelCountError: The raster does not have exactly 3 channels.

    Example:
        >>> normals = load_normal_image("seq/0000.png")
        >>> normals.normals[0, 0]
        array([0., 0., 1.])
    """
    array = _read_raster(path)
    if array.ndim != 3 or array.shape[2] != 3:
        raise ChannelCountError(f"{path}: normal maps need 3 channels")
    return decode_normals(array)


def quantize(image: Image) -> np.ndarray:
    """Clamp to ``[0, 1]`` and round to 8 bits."""
    return np.rint(np.clip(image.data, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(img: Image, path: str | Path) -> None:
    """Write a 1- or 3-channel ``[0, 1]`` image as a lossless 8-bit PNG.

    Values outside ``[0, 1]`` are clamped, so ``1.5`` is stored as 255.

    Args:
        img: Image to write.
        path: Destination file; parent directories are created.

    Raises:
        ChannelCountError: The image has 2 channels.
        UnwritablePathError: The destination cannot be written.
    """
    if img.channels not in (1, 3):
        raise ChannelCountError(f"can only save 1 or 3 channel images, got {img.channels}")
    pixels = quantize(img)
    if img.channels == 1:
        pixels = pixels[:, :, 0]
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        PILImage.fromarray(pixels).save(path, format="PNG")
    except OSError as e:
        raise UnwritablePathError(f"cannot write {path}: {e}") from e


def save_normal_image(normal_map: NormalMap, path: str | Path) -> None:
    """Write a normal map in the standard 8-bit encoding."""
    save_image(normals_to_image(normal_map), path)


def frame_path(directory: str | Path, index: int) -> Path:
    """Path of frame ``index`` inside a sequence directory."""
    return Path(directory) / FRAME_PATTERN.format(index=index)


def list_frames(directory: str | Path) -> list[Path]:
    """Sorted PNG files of a sequence directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputNotFoundError(f"sequence directory not found: {directory}")
    return sorted(directory.glob("*.png"))


def load_normal_sequence(directory: str | Path) -> list[NormalMap]:
    """Load every PNG of a directory, in name order, as normal maps."""
    paths = list_frames(directory)
    logger.debug("Loading %d normal maps from %s", len(paths), directory)
    return [load_normal_image(p) for p in paths]


def load_image_sequence(directory: str | Path) -> list[Image]:
    """Load every PNG of a directory, in name order, as images."""
    return [load_image(p) for p in list_frames(directory)]


def save_sequence(images: Sequence[Image], directory: str | Path) -> list[Path]:
    """Write images as ``NNNN.png`` files and return the paths."""
    paths = []
    for index, img in enumerate(images):
        target = frame_path(directory, index)
        save_image(img, target)
        paths.append(target)
    return paths


__all__ = [
    "frame_path",
    "list_frames",
    "load_image",
    "load_image_sequence",
    "load_normal_image",
    "load_normal_sequence",
    "quantize",
    "save_image",
    "save_normal_image",
    "save_sequence",
]
