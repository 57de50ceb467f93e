"""Pairwise image quality measures: RMSE, PSNR and SSIM.

SSIM is the standard windowed index (Gaussian window of 11x11 taps,
``sigma = 1.5``, stabilizers ``C1 = (0.01 * peak)**2`` and
``C2 = (0.03 * peak)**2``, population covariances) computed with
scikit-image and averaged over the windows that fit entirely inside the
image and over channels.
"""

from __future__ import annotations

import math

import numpy as np
from skimage.metrics import structural_similarity

from ..errors import InvalidParameterError, ShapeMismatchError
from ..imaging.types import Image


SSIM_SIGMA = 1.5
SSIM_WINDOW = 11


def _same_shape(a: Image, b: Image) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeMismatchError(f"image shapes differ: {a.data.shape} vs {b.data.shape}")


def rmse(a: Image, b: Image) -> float:
    """Root of the mean squared difference over all pixels and channels."""
    _same_shape(a, b)
    return float(np.sqrt(np.mean((a.data - b.data) ** 2)))


def psnr_from_rmse(error: float, peak: float) -> float:
    """``20 * log10(peak / error)``; ``math.inf`` when ``error`` is 0."""
    if peak <= 0:
        raise InvalidParameterError(f"peak must be positive, got {peak}")
    if error == 0.0:
        return math.inf
    return 20.0 * math.log10(peak / error)


def psnr(a: Image, b: Image, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB.

    Returns:
        ``math.inf`` for identical images.

    Example:
        >>> base = Image(data=np.full((8, 8), 100.0))
        >>> round(psnr(base, Image(data=base.data + 3.0), peak=255.0), 2)
        38.59
    """
    return psnr_from_rmse(rmse(a, b), peak)


def ssim(a: Image, b: Image, peak: float = 1.0) -> float:
    """Mean structural similarity of two images.

    Args:
        a: First image.
        b: Second image, same shape as ``a``.
        peak: Dynamic range of the pixel values (1.0 for frames, 255 for
            8-bit encodings).

    Returns:
        SSIM in ``(-1, 1]``; exactly 1.0 for identical inputs.

    Raises:
        ShapeMismatchError: The images differ in shape.
        InvalidParameterError: Either side is smaller than 11x11 or
            ``peak`` is not positive.
    """
    _same_shape(a, b)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise InvalidParameterError(
            f"ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {a.width}x{a.height}",
        )
    if peak <= 0:
        raise InvalidParameterError(f"peak must be positive, got {peak}")
    return float(
        structural_similarity(
            a.data,
            b.data,
            data_range=peak,
            channel_axis=-1,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
        ),
    )


__all__ = ["psnr", "psnr_from_rmse", "rmse", "ssim"]
