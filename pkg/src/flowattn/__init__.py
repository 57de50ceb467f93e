"""flowattn: flow-guided self-attention manipulation for temporally
consistent frame generation from surface-normal sequences.

The package is organized by concern: ``imaging`` (rasters and normal maps),
``synth`` (synthetic sequences), ``flow`` (estimation, ``.flo`` files,
masks), ``warp`` (bilinear warping and resampling), ``attention`` (the
attention algebra), ``toygen`` (the toy denoising pipeline), ``metrics``,
``viz`` and ``cli``.

License:
    Apache 2.0
"""

from __future__ import annotations


__version__ = "0.1.0"
__all__ = ["__version__"]
