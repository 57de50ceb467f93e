"""Self-attention evaluation and cross-frame key/value injection.

``self_attention`` computes ``Softmax(Q K^T / sqrt(d)) V`` with
``Q = q_in W_q``, ``K = kv_in W_k`` and ``V = kv_in W_v``. Queries are
processed in chunks so a 64x64 grid attending to an injected 2 x 4096-token
context keeps its logit buffer to a few megabytes.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import softmax

from ..errors import ShapeMismatchError
from .types import AttentionTensor, FeatureBlock, ProjectionSet


DEFAULT_CHUNK = 128


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax; invariant to adding a constant to a row."""
    return softmax(logits, axis=-1)


def _check_operands(q_in: FeatureBlock, kv_in: FeatureBlock, proj: ProjectionSet) -> None:
    if not q_in.dim == kv_in.dim == proj.input_dim:
        raise ShapeMismatchError(
            f"feature dims q={q_in.dim} kv={kv_in.dim} do not match projections ({proj.input_dim})",
        )
    if kv_in.tokens < 1:
        raise ShapeMismatchError("key/value features need at least one token")


def attention_weights(q_in: FeatureBlock, kv_in: FeatureBlock, proj: ProjectionSet) -> np.ndarray:
    """The full ``(q_tokens, kv_tokens)`` softmax weight matrix."""
    _check_operands(q_in, kv_in, proj)
    queries = q_in.data @ proj.w_q
    keys = kv_in.data @ proj.w_k
    return softmax_rows(queries @ keys.T / math.sqrt(proj.key_dim))


def self_attention(
    q_in: FeatureBlock,
    kv_in: FeatureBlock,
    proj: ProjectionSet,
    chunk_size: int = DEFAULT_CHUNK,
) -> AttentionTensor:
    """Evaluate one self-attention block.

    The softmax is evaluated in place per query chunk. Row sums come out of
    the same product as the weighted values through an appended ones
    column, and when the feature width is below the output width the value
    projection is applied after mixing (``(P X) W_v`` instead of
    ``P (X W_v)``).

    Args:
        q_in: Features providing the queries (the current frame).
        kv_in: Features providing keys and values; the current frame itself,
            or the output of :func:`inject_kv`.
        proj: Layer projections.
        chunk_size: Number of queries evaluated per matrix product.

    Returns:
        ``(height, width, d_out)`` tensor laid out on ``q_in.grid``
        (``(1, tokens)`` when the block has no grid).

    Raises:
        ShapeMismatchError: Feature and projection dimensions disagree, or
            ``kv_in`` is empty.

    Example:
        >>> block = FeatureBlock(data=np.ones((1, 4)))
        >>> out = self_attention(block, block, proj)  # single token: output is its V row
    """
    _check_operands(q_in, kv_in, proj)
    dtype = np.result_type(q_in.data, kv_in.data, proj.w_q, proj.w_k, proj.w_v)
    scale = dtype.type(1.0 / math.sqrt(proj.key_dim))
    queries = (q_in.data @ proj.w_q).astype(dtype, copy=False) * scale
    keys_t = np.ascontiguousarray((kv_in.data @ proj.w_k).astype(dtype, copy=False).T)

    late_values = proj.input_dim < proj.output_dim
    context = kv_in.data if late_values else kv_in.data @ proj.w_v
    context = np.concatenate(
        [context.astype(dtype, copy=False), np.ones((kv_in.tokens, 1), dtype=dtype)], axis=1,
    )

    out = np.empty((q_in.tokens, proj.output_dim), dtype=dtype)
    chunk = max(chunk_size, 1)
    for start in range(0, q_in.tokens, chunk):
        stop = min(start + chunk, q_in.tokens)
        logits = queries[start:stop] @ keys_t
        logits -= logits.max(axis=1, keepdims=True)
        np.exp(logits, out=logits)
        mixed = logits @ context
        mixed = mixed[:, :-1] / mixed[:, -1:]
        out[start:stop] = mixed @ proj.w_v if late_values else mixed

    height, width = q_in.grid or (1, q_in.tokens)
    return AttentionTensor(data=out.reshape(height, width, proj.output_dim))


def inject_kv(h_anchor: FeatureBlock, h_prev: FeatureBlock) -> FeatureBlock:
    """Concatenate anchor-frame and previous-frame features along the token axis.

    The result feeds the key/value side of :func:`self_attention`, coupling
    the current frame to frame 0 and frame ``i-1``.

    Raises:
        ShapeMismatchError: The blocks have different feature dimensions.
    """
    if h_anchor.dim != h_prev.dim:
        raise ShapeMismatchError(f"feature dims differ: {h_anchor.dim} vs {h_prev.dim}")
    return FeatureBlock(data=np.concatenate([h_anchor.data, h_prev.data], axis=0))


__all__ = ["attention_weights", "inject_kv", "self_attention", "softmax_rows"]
