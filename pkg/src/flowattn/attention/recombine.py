"""Flow-warped attention recombination with masked background correction."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError, ShapeMismatchError
from ..flow.types import BinaryMask, FlowField
from ..warp.bilinear import warp_channels
from .types import AttentionTensor


def float_recombine(
    a_cur: AttentionTensor,
    a_prev: AttentionTensor,
    f: FlowField,
    m: BinaryMask,
    alpha: float,
) -> AttentionTensor:
    """Blend the current attention with the flow-warped previous one.

    Per channel ``s``::

        blended = alpha * a_cur + (1 - alpha) * warp(a_prev, f)
        out = (1 - m) * a_prev + m * blended

    Where the mask is 0 the previous frame's attention is copied verbatim;
    applied frame after frame this pins static regions to the anchor
    frame's attention.

    Args:
        a_cur: Attention of the current frame.
        a_prev: Attention of the previous frame (its corrected map when
            run inside the generation loop).
        f: Backward flow at attention resolution; ``a_prev`` is sampled at
            ``x + f(x)``.
        m: Motion mask at attention resolution.
        alpha: Weight of ``a_cur`` in ``[0, 1]``.

    Returns:
        The corrected attention, in the common dtype of the inputs.

    Raises:
        ShapeMismatchError: Tensors, flow and mask disagree in size.
        InvalidParameterError: ``alpha`` is outside ``[0, 1]``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameterError(f"alpha must be in [0, 1], got {alpha}")
    if a_cur.shape != a_prev.shape:
        raise ShapeMismatchError(f"attention shapes differ: {a_cur.shape} vs {a_prev.shape}")
    grid = (a_cur.height, a_cur.width)
    if f.shape != grid or m.shape != grid:
        raise ShapeMismatchError(
            f"flow {f.shape} and mask {m.shape} must match the attention grid {grid}",
        )

    dtype = np.result_type(a_cur.data, a_prev.data)
    cur = a_cur.data.astype(dtype, copy=False)
    prev = a_prev.data.astype(dtype, copy=False)
    warped = warp_channels(prev, f)
    blended = dtype.type(alpha) * cur + dtype.type(1.0 - alpha) * warped

    moving = m.values.astype(dtype)[:, :, None]
    corrected = (1 - moving) * prev + moving * blended
    return AttentionTensor(data=corrected)


__all__ = ["float_recombine"]
