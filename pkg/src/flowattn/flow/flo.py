"""Middlebury ``.flo`` reader and writer.

Layout (all little-endian): float32 magic ``202021.25`` (the bytes spell
``PIEH``), int32 width, int32 height, then ``height * width`` interleaved
float32 ``(u, v)`` pairs in row-major order.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..errors import (
    BadMagicError,
    FloDimensionError,
    InputNotFoundError,
    TruncatedFloError,
    UnwritablePathError,
)
from .types import FlowField


logger = logging.getLogger(__name__)

FLO_MAGIC = np.float32(202021.25)
HEADER_BYTES = 12
# Refuse headers describing more than 2**28 pixels.
MAX_PIXELS = 1 << 28

_F32 = np.dtype("<f4")
_I32 = np.dtype("<i4")


def encode_flo(f: FlowField) -> bytes:
    """Serialize a flow field to ``.flo`` bytes."""
    header = np.array([FLO_MAGIC], dtype=_F32).tobytes()
    header += np.array([f.width, f.height], dtype=_I32).tobytes()
    return header + f.vectors.astype(_F32).tobytes(order="C")


def decode_flo(blob: bytes) -> FlowField:
    """Parse ``.flo`` bytes.

    Raises:
        BadMagicError: The first four bytes are not the magic float.
        FloDimensionError: Width or height is non-positive or too large.
        TruncatedFloError: Header or payload is shorter than declared.
    """
    if len(blob) < 4:
        raise TruncatedFloError("file shorter than the magic number")
    magic = np.frombuffer(blob, dtype=_F32, count=1)[0]
    if magic != FLO_MAGIC:
        raise BadMagicError(f"bad magic {float(magic)!r}, expected {float(FLO_MAGIC)}")
    if len(blob) < HEADER_BYTES:
        raise TruncatedFloError("file shorter than the header")
    width, height = (int(x) for x in np.frombuffer(blob, dtype=_I32, count=2, offset=4))
    if width < 1 or height < 1 or width * height > MAX_PIXELS:
        raise FloDimensionError(f"invalid dimensions {width}x{height}")
    expected = HEADER_BYTES + width * height * 2 * _F32.itemsize
    if len(blob) < expected:
        raise TruncatedFloError(f"payload has {len(blob)} bytes, header promises {expected}")
    if len(blob) > expected:
        logger.warning("Ignoring %d trailing bytes after .flo payload", len(blob) - expected)
    data = np.frombuffer(blob, dtype=_F32, count=width * height * 2, offset=HEADER_BYTES)
    return FlowField(vectors=data.reshape(height, width, 2))


def write_flo(f: FlowField, path: str | Path) -> None:
    """Write a flow field as a Middlebury ``.flo`` file.

    Components are stored as float32; ``read_flo(write_flo(f))`` is
    bit-exact for fields whose values are float32-representable.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_flo(f))
    except OSError as e:
        raise UnwritablePathError(f"cannot write {path}: {e}") from e


def read_flo(path: str | Path) -> FlowField:
    """Read a Middlebury ``.flo`` file.

    Example:
        >>> flow = read_flo("flows/0001.flo")
        >>> flow.vectors.shape
        (128, 128, 2)
    """
    path = Path(path)
    if not path.is_file():
        raise InputNotFoundError(f"flow file not found: {path}")
    return decode_flo(path.read_bytes())


__all__ = ["FLO_MAGIC", "decode_flo", "encode_flo", "read_flo", "write_flo"]
