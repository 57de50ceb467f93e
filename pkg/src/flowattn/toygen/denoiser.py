"""A deterministic toy denoiser with hookable self-attention layers.

The denoiser stands in for a conditioned diffusion U-Net. Its weights are
fixed pseudo-random matrices drawn from counter-based Philox streams, so
construction is pure and bit-reproducible from the seed. With ``c`` the
per-pixel conditioning (``cond_weight`` times the deviation of the
downsampled normal map from the flat normal), one denoising step on a
latent ``x`` of shape ``(L*L, c_lat)`` is::

    h   = tanh(x W_in + c W_cond + prompt + temb[step])
    A_l = self_attention(h_l, h_l)          (h_{l+1} = h_l + A_l W_res)
    eps = tanh(A_last W_out + x W_skip + c W_eps)
    x   = keep_rate * x + (1 - keep_rate) * eps

Everything outside the attention layers acts per latent pixel, so a latent
pixel only sees other pixels through attention, and a flat background
receives no conditioning at all. Decoding is a fixed per-pixel linear map
to RGB, bilinear upsampling and a frame-independent ``0.5 * (1 + tanh(.))``
range normalization.

License:
    Apache 2.0
"""

from __future__ import annotations

import enum
import hashlib
import logging
import math

import numpy as np
from pydantic import BaseModel, Field

from ..attention.types import FeatureBlock, HookSelector, ProjectionSet
from ..errors import InvalidParameterError
from ..imaging.types import UP_NORMAL, ArrayModel, Image, NormalMap, frozen_array
from ..warp.resample import resize_bilinear


logger = logging.getLogger(__name__)

DTYPE = np.float32


class Stream(enum.IntEnum):
    """Philox stream ids; one independent stream per weight family."""

    noise = 0
    w_in = 1
    w_cond = 2
    w_out = 3
    w_skip = 4
    w_dec = 5
    step_embedding = 6
    w_res = 7
    w_eps = 8
    attention = 100


def philox(seed: int, stream: int) -> np.random.Generator:
    """Generator on the counter-based stream ``stream`` of ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, int(stream)])))


def _gaussian(seed: int, stream: int, shape: tuple[int, ...], scale: float) -> np.ndarray:
    return (philox(seed, stream).standard_normal(shape) * scale).astype(DTYPE)


class DenoiserSettings(BaseModel):
    """Shape and schedule of the toy denoiser.

    Attributes:
        seed: Seed of every weight and of the shared initial noise.
        latent_size: Side ``L`` of the square latent / attention grid.
        channels: Attention output width ``d_out``.
        feature_dim: Width of the features entering the attention layers.
        key_dim: Query/key projection width.
        latent_channels: Channels of the latent.
        steps: Number of denoising steps ``T``.
        cond_weight: Mixing strength of the normal-map conditioning.
        blocks: Number of attention blocks.
        layers_per_block: Self-attention layers per block.
        keep_rate: Fraction of the latent kept at each update.
    """

    seed: int = Field(default=0, ge=0)
    latent_size: int = Field(default=64, ge=1)
    channels: int = Field(default=320, ge=1)
    feature_dim: int = Field(default=32, ge=1)
    key_dim: int = Field(default=32, ge=1)
    latent_channels: int = Field(default=4, ge=1)
    steps: int = Field(default=20, ge=1)
    cond_weight: float = 1.0
    blocks: int = Field(default=1, ge=1)
    layers_per_block: int = Field(default=1, ge=1)
    keep_rate: float = Field(default=0.5, ge=0.0, lt=1.0)


class ToyDenoiser(ArrayModel):
    """Frozen weights of the toy denoiser; shareable between threads.

    Build instances with :func:`build_toy_denoiser`.
    """

    settings: DenoiserSettings
    layer_projections: tuple[ProjectionSet, ...]
    w_in: np.ndarray
    w_cond: np.ndarray
    w_res: np.ndarray
    w_out: np.ndarray
    w_skip: np.ndarray
    w_eps: np.ndarray
    w_dec: np.ndarray
    step_embedding: np.ndarray

    @property
    def seed(self) -> int:
        return self.settings.seed

    @property
    def latent_size(self) -> int:
        return self.settings.latent_size

    @property
    def channels(self) -> int:
        return self.settings.channels

    @property
    def steps(self) -> int:
        return self.settings.steps

    @property
    def cond_weight(self) -> float:
        return self.settings.cond_weight

    @property
    def grid(self) -> tuple[int, int]:
        return self.latent_size, self.latent_size

    def hook_index(self, hook: HookSelector) -> int:
        """Flat layer index addressed by ``hook`` (negative indices count from the end).

        Raises:
            InvalidParameterError: The block or layer does not exist.
        """
        blocks, per_block = self.settings.blocks, self.settings.layers_per_block
        block = hook.block + blocks if hook.block < 0 else hook.block
        layer = hook.layer + per_block if hook.layer < 0 else hook.layer
        if not (0 <= block < blocks and 0 <= layer < per_block):
            raise InvalidParameterError(
                f"hook {hook.block}/{hook.layer} is outside {blocks} blocks x {per_block} layers",
            )
        return block * per_block + layer

    def initial_latent(self) -> np.ndarray:
        """The shared initial noise ``x_T``, identical for every frame."""
        shape = (self.latent_size * self.latent_size, self.settings.latent_channels)
        return _gaussian(self.seed, Stream.noise, shape, 1.0)

    def prompt_embedding(self, prompt: str) -> np.ndarray:
        """Seed-stable ``(feature_dim,)`` vector derived from a hash of the prompt."""
        digest = hashlib.blake2b(prompt.encode("utf-8"), digest_size=8).digest()
        rng = philox(self.seed, int.from_bytes(digest, "little"))
        return (rng.standard_normal(self.settings.feature_dim) * 0.5).astype(DTYPE)

    def condition(self, normals: NormalMap) -> np.ndarray:
        """Per-pixel conditioning ``(L*L, 3)``: weighted deviation from the flat normal."""
        coarse = resize_bilinear(normals.normals, self.latent_size, self.latent_size)
        offset = coarse.reshape(-1, 3) - UP_NORMAL
        return (self.cond_weight * offset).astype(DTYPE)

    def layer_input(
        self,
        x: np.ndarray,
        cond: np.ndarray,
        prompt_vec: np.ndarray,
        step: int,
    ) -> FeatureBlock:
        """Input features of the first attention layer at ``step``."""
        h = np.tanh(x @ self.w_in + cond @ self.w_cond + prompt_vec + self.step_embedding[step])
        return FeatureBlock(data=h, grid=self.grid)

    def residual(self, h: FeatureBlock, attention: np.ndarray) -> FeatureBlock:
        """Features of the next attention layer given this layer's ``(L*L, channels)`` output."""
        return FeatureBlock(data=h.data + attention @ self.w_res, grid=self.grid)

    def predict_noise(self, x: np.ndarray, attention: np.ndarray, cond: np.ndarray) -> np.ndarray:
        """Noise estimate from the last attention layer's ``(L*L, channels)`` output."""
        return np.tanh(attention @ self.w_out + x @ self.w_skip + cond @ self.w_eps)

    def update_latent(self, x: np.ndarray, eps: np.ndarray) -> np.ndarray:
        keep = DTYPE(self.settings.keep_rate)
        return keep * x + (DTYPE(1.0) - keep) * eps

    def decode(self, x: np.ndarray, width: int, height: int) -> Image:
        """Project a final latent to RGB at ``width x height``."""
        rgb = (x @ self.w_dec).reshape(self.latent_size, self.latent_size, 3)
        upsampled = resize_bilinear(rgb, width, height).astype(np.float64)
        return Image(data=0.5 * (1.0 + np.tanh(upsampled)))


def _check_dims(**dims: int) -> None:
    for name, value in dims.items():
        if value < 1:
            raise InvalidParameterError(f"{name} must be >= 1, got {value}")


def build_toy_denoiser(
    seed: int = 0,
    latent_size: int = 64,
    channels: int = 320,
    steps: int = 20,
    cond_weight: float = 1.0,
    **options: int | float,
) -> ToyDenoiser:
    """Build a toy denoiser from counter-based pseudo-random streams.

    Args:
        seed: Weight and noise seed.
        latent_size: Side of the latent grid.
        channels: Attention output width.
        steps: Denoising steps.
        cond_weight: Conditioning strength.
        **options: Remaining :class:`DenoiserSettings` fields
            (``feature_dim``, ``key_dim``, ``latent_channels``,
            ``blocks``, ``layers_per_block``, ``keep_rate``).

    Returns:
        The frozen denoiser.

    Raises:
        InvalidParameterError: A dimension or step count is below 1.

    Example:
        >>> den = build_toy_denoiser(seed=3, latent_size=16, channels=32, steps=4)
        >>> den.initial_latent().shape
        (256, 4)
    """
    _check_dims(latent_size=latent_size, channels=channels, steps=steps)
    _check_dims(**{k: int(v) for k, v in options.items() if k != "keep_rate"})
    settings = DenoiserSettings(
        seed=seed,
        latent_size=latent_size,
        channels=channels,
        steps=steps,
        cond_weight=cond_weight,
        **options,
    )
    return build_from_settings(settings)


def build_from_settings(settings: DenoiserSettings) -> ToyDenoiser:
    """Build a toy denoiser from a validated :class:`DenoiserSettings`."""
    seed, c, d = settings.seed, settings.channels, settings.key_dim
    width = settings.feature_dim
    c_lat = settings.latent_channels
    n_layers = settings.blocks * settings.layers_per_block

    # query/key scale puts the attention logits at a standard deviation near 3
    projections = []
    for layer in range(n_layers):
        base = Stream.attention + 3 * layer
        projections.append(
            ProjectionSet(
                w_q=_gaussian(seed, base, (width, d), 2.5 / math.sqrt(width)),
                w_k=_gaussian(seed, base + 1, (width, d), 2.5 / math.sqrt(width)),
                w_v=_gaussian(seed, base + 2, (width, c), 1.0 / math.sqrt(width)),
            ),
        )

    def weights(stream: Stream, shape: tuple[int, ...], scale: float) -> np.ndarray:
        return frozen_array(_gaussian(seed, stream, shape, scale), DTYPE)

    denoiser = ToyDenoiser(
        settings=settings,
        layer_projections=tuple(projections),
        w_in=weights(Stream.w_in, (c_lat, width), 1.0 / math.sqrt(c_lat)),
        w_cond=weights(Stream.w_cond, (3, width), 4.0),
        w_res=weights(Stream.w_res, (c, width), 1.0 / math.sqrt(c)),
        w_out=weights(Stream.w_out, (c, c_lat), 2.0 / math.sqrt(c)),
        w_skip=weights(Stream.w_skip, (c_lat, c_lat), 0.5 / math.sqrt(c_lat)),
        w_eps=weights(Stream.w_eps, (3, c_lat), 1.5),
        w_dec=weights(Stream.w_dec, (c_lat, 3), 1.0),
        step_embedding=weights(Stream.step_embedding, (settings.steps, width), 0.3),
    )
    logger.debug(
        "Built toy denoiser",
        extra={"seed": seed, "latent_size": settings.latent_size, "channels": c, "layers": n_layers},
    )
    return denoiser


__all__ = [
    "DenoiserSettings",
    "ToyDenoiser",
    "build_from_settings",
    "build_toy_denoiser",
    "philox",
]
