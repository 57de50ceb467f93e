"""Binary dumps of attention tensors (``.tns``).

Layout, little-endian: the four bytes ``ATNS``, int32 ``ndim``, ``ndim``
int32 dimensions, then the float32 payload in C order. Attention tensors
are written as ``(height, width, channels)``.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..attention.types import AttentionTensor
from ..errors import InputNotFoundError, TensorDumpError, UnwritablePathError


logger = logging.getLogger(__name__)

TENSOR_MAGIC = b"ATNS"
MAX_NDIM = 8

_F32 = np.dtype("<f4")
_I32 = np.dtype("<i4")


def encode_tensor(array: np.ndarray) -> bytes:
    array = np.asarray(array)
    header = TENSOR_MAGIC + np.array([array.ndim, *array.shape], dtype=_I32).tobytes()
    return header + array.astype(_F32).tobytes(order="C")


def decode_tensor(blob: bytes) -> np.ndarray:
    """Parse ``.tns`` bytes into a float32 array.

    Raises:
        TensorDumpError: Bad magic, implausible header or short payload.
    """
    if blob[:4] != TENSOR_MAGIC:
        raise TensorDumpError(f"bad magic {blob[:4]!r}, expected {TENSOR_MAGIC!r}")
    if len(blob) < 8:
        raise TensorDumpError("file shorter than the header")
    ndim = int(np.frombuffer(blob, dtype=_I32, count=1, offset=4)[0])
    if not 0 < ndim <= MAX_NDIM or len(blob) < 8 + 4 * ndim:
        raise TensorDumpError(f"invalid dimension count {ndim}")
    dims = tuple(int(d) for d in np.frombuffer(blob, dtype=_I32, count=ndim, offset=8))
    if min(dims) < 1:
        raise TensorDumpError(f"invalid dimensions {dims}")
    offset = 8 + 4 * ndim
    count = int(np.prod(dims))
    if len(blob) - offset < count * _F32.itemsize:
        raise TensorDumpError(f"payload shorter than the {dims} the header declares")
    data = np.frombuffer(blob, dtype=_F32, count=count, offset=offset)
    return data.reshape(dims).astype(np.float32)


def write_tensor(tensor: AttentionTensor | np.ndarray, path: str | Path) -> None:
    """Write an attention tensor (or any array) as a ``.tns`` dump."""
    data = tensor.data if isinstance(tensor, AttentionTensor) else tensor
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_tensor(data))
    except OSError as e:
        raise UnwritablePathError(f"cannot write {path}: {e}") from e


def read_tensor(path: str | Path) -> AttentionTensor:
    """Read a ``.tns`` dump holding a ``(height, width, channels)`` tensor.

    Raises:
        InputNotFoundError: ``path`` does not exist.
        TensorDumpError: The file is malformed or not three-dimensional.
    """
    path = Path(path)
    if not path.is_file():
        raise InputNotFoundError(f"tensor dump not found: {path}")
    data = decode_tensor(path.read_bytes())
    if data.ndim != 3:
        raise TensorDumpError(f"expected a (H, W, C) tensor, got shape {data.shape}")
    return AttentionTensor(data=data)


def attention_path(directory: str | Path, frame: int, step: int) -> Path:
    """``<directory>/frameNNNN_stepTT.tns``."""
    return Path(directory) / f"frame{frame:04d}_step{step:02d}.tns"


__all__ = [
    "TENSOR_MAGIC",
    "attention_path",
    "decode_tensor",
    "encode_tensor",
    "read_tensor",
    "write_tensor",
]
