"""Frame-by-frame generation with cross-frame attention coupling.

Every frame starts from the same initial noise and runs the full denoising
schedule of a :class:`ToyDenoiser`. The generation mode decides how frame
``i`` is coupled to the frames before it at the hooked attention layer:

* ``plain``: frames are generated independently.
* ``feat_inject``: for the first ``inject_fraction`` of the steps the keys
  and values come from the anchor (frame 0) and previous frame features.
* ``feat_inject_mask``: injection plus masked correction against the
  previous frame's attention, without warping.
* ``float``: injection plus flow-warped recombination and masked
  correction.
* ``latent_warp``: injection plus blending each latent with the
  flow-warped latent of the previous frame.

License:
    Apache 2.0
"""

from __future__ import annotations

import enum
import logging
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..attention.ops import inject_kv, self_attention
from ..attention.recombine import float_recombine
from ..attention.types import AttentionTensor, FeatureBlock, FloatConfig, FlowDirection
from ..errors import InvalidParameterError, ShapeMismatchError
from ..flow.estimate import estimate_flow
from ..flow.mask import compute_mask
from ..flow.types import BinaryMask, FlowField, FlowParams
from ..imaging.types import Image, NormalMap
from ..warp.bilinear import warp_channels
from ..warp.resample import resample_flow, resample_mask
from .denoiser import ToyDenoiser


logger = logging.getLogger(__name__)

AttentionSink = Callable[[int, int, AttentionTensor], None]


class GenerationMode(str, enum.Enum):
    """Cross-frame coupling variant."""

    plain = "plain"
    feat_inject = "feat_inject"
    feat_inject_mask = "feat_inject_mask"
    float = "float"
    latent_warp = "latent_warp"

    @classmethod
    def from_cli(cls, name: str) -> GenerationMode:
        """Parse a command-line mode name (``featin``, ``featin-mask``, ...)."""
        try:
            return cls(_CLI_ALIASES.get(name, name))
        except ValueError as exc:
            raise InvalidParameterError(f"unknown generation mode {name!r}") from exc

    @property
    def injects(self) -> bool:
        return self is not GenerationMode.plain

    @property
    def corrects(self) -> bool:
        return self in (GenerationMode.feat_inject_mask, GenerationMode.float)

    @property
    def needs_flow(self) -> bool:
        return self in (
            GenerationMode.feat_inject_mask,
            GenerationMode.float,
            GenerationMode.latent_warp,
        )


_CLI_ALIASES = {
    "featin": "feat_inject",
    "featin-mask": "feat_inject_mask",
    "latent-warp": "latent_warp",
}

CLI_MODE_NAMES = ("plain", "featin", "featin-mask", "float", "latent-warp")


class FrameSequence(BaseModel):
    """Generated frames with the hooked attention of every step.

    Attributes:
        frames: One RGB image per input normal map, values in ``[0, 1]``.
        recorded_attention: Hooked-layer output after manipulation, keyed
            by ``(frame, step)``; empty when recording was disabled.
        config: Echo of the mode, manipulation config and denoiser settings.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    frames: list[Image]
    recorded_attention: dict[tuple[int, int], AttentionTensor] = Field(default_factory=dict)
    config: dict[str, Any] = Field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.frames)


class _Coupling(BaseModel):
    """Flow and mask of one frame at attention resolution."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    flow: FlowField
    mask: BinaryMask


def _check_inputs(normals: Sequence[NormalMap], flows: Sequence[FlowField] | None) -> None:
    if len(normals) < 2:
        raise InvalidParameterError(f"need at least 2 normal maps, got {len(normals)}")
    size = normals[0].shape
    for index, n in enumerate(normals):
        if n.shape != size:
            raise ShapeMismatchError(f"normal map {index} is {n.shape}, expected {size}")
    if flows is None:
        return
    if len(flows) != len(normals):
        raise ShapeMismatchError(f"{len(flows)} flows for {len(normals)} normal maps")
    for index, f in enumerate(flows[1:], start=1):
        if f.shape != size:
            raise ShapeMismatchError(f"flow {index} is {f.shape}, expected {size}")


def _image_flow(
    normals: Sequence[NormalMap],
    flows: Sequence[FlowField] | None,
    index: int,
    cfg: FloatConfig,
    flow_params: FlowParams | None,
) -> FlowField:
    if flows is not None:
        return flows[index]
    if cfg.flow_direction is FlowDirection.backward:
        return estimate_flow(normals[index], normals[index - 1], flow_params)
    return estimate_flow(normals[index - 1], normals[index], flow_params)


def _coupling(
    image_flow: FlowField,
    mode: GenerationMode,
    cfg: FloatConfig,
    size: int,
) -> _Coupling:
    mask = resample_mask(compute_mask(image_flow, cfg.threshold), size, size)
    if mode is GenerationMode.feat_inject_mask:
        return _Coupling(flow=FlowField.zeros(size, size), mask=mask)
    coarse = resample_flow(image_flow, size, size)
    if cfg.flow_direction is FlowDirection.forward:
        coarse = coarse.negated()
    return _Coupling(flow=coarse, mask=mask)


def generate_sequence(
    normals: Sequence[NormalMap],
    prompt: str,
    denoiser: ToyDenoiser,
    mode: GenerationMode,
    cfg: FloatConfig | None = None,
    *,
    flows: Sequence[FlowField] | None = None,
    flow_params: FlowParams | None = None,
    record: bool = True,
    attention_sink: AttentionSink | None = None,
) -> FrameSequence:
    """Generate one frame per normal map.

    Args:
        normals: Conditioning normal maps, all the same size.
        prompt: Text hashed into the prompt embedding.
        denoiser: Frozen toy denoiser.
        mode: Cross-frame coupling variant.
        cfg: Manipulation knobs; defaults to :class:`FloatConfig()`.
        flows: Optional per-frame flows at image resolution (``flows[0]``
            is ignored), in the convention named by ``cfg.flow_direction``.
            Estimated from consecutive normal maps when omitted.
        flow_params: Estimator parameters used when flows are estimated.
        record: Keep every hooked attention tensor in the result.
        attention_sink: Called with ``(frame, step, tensor)`` for every
            hooked attention tensor, e.g. to stream them to disk.

    Returns:
        The generated :class:`FrameSequence`.

    Raises:
        InvalidParameterError: Fewer than two normal maps, or a hook outside
            the denoiser.
        ShapeMismatchError: Normal maps or flows differ in size.

    Example:
        >>> seq = generate_sequence(normals, "flag", den, GenerationMode.float)
        >>> len(seq) == len(normals)
        True
    """
    cfg = cfg or FloatConfig()
    normals = list(normals)
    _check_inputs(normals, flows)

    steps = denoiser.steps
    size = denoiser.latent_size
    projections = denoiser.layer_projections
    hook = denoiser.hook_index(cfg.hook)
    last = len(projections) - 1
    inject_steps = cfg.inject_steps(steps) if mode.injects else 0
    recombine_steps = cfg.recombine_steps(steps) if mode.corrects else 0
    alpha = 1.0 if mode is GenerationMode.feat_inject_mask else cfg.alpha
    height, width = normals[0].shape

    logger.info(
        "Generating %d frames in %s mode",
        len(normals),
        mode.value,
        extra={"inject_steps": inject_steps, "recombine_steps": recombine_steps, "alpha": alpha},
    )

    x_init = denoiser.initial_latent()
    prompt_vec = denoiser.prompt_embedding(prompt)

    anchor_features: list[FeatureBlock] = []
    prev_features: list[FeatureBlock] = []
    prev_attention: list[AttentionTensor] = []
    prev_latents: list[np.ndarray] = []
    frames: list[Image] = []
    recorded: dict[tuple[int, int], AttentionTensor] = {}

    for i, normal_map in enumerate(normals):
        coupling = None
        if i > 0 and mode.needs_flow:
            image_flow = _image_flow(normals, flows, i, cfg, flow_params)
            coupling = _coupling(image_flow, mode, cfg, size)

        cond = denoiser.condition(normal_map)
        x = x_init.copy()
        cur_features: list[FeatureBlock] = []
        cur_attention: list[AttentionTensor] = []
        cur_latents: list[np.ndarray] = []

        for s in range(steps):
            h = denoiser.layer_input(x, cond, prompt_vec, s)
            out = h.data
            for layer, proj in enumerate(projections):
                kv = h
                if layer == hook:
                    if s < inject_steps:
                        cur_features.append(h)
                        if i > 0:
                            kv = inject_kv(anchor_features[s], prev_features[s])
                attention = self_attention(h, kv, proj)
                if layer == hook:
                    if i > 0 and s < recombine_steps and coupling is not None:
                        attention = float_recombine(
                            attention, prev_attention[s], coupling.flow, coupling.mask, alpha,
                        )
                    if s < recombine_steps:
                        cur_attention.append(attention)
                    if record:
                        recorded[(i, s)] = attention
                    if attention_sink is not None:
                        attention_sink(i, s, attention)
                out = attention.data.reshape(-1, attention.channels)
                if layer < last:
                    h = denoiser.residual(h, out)

            x = denoiser.update_latent(x, denoiser.predict_noise(x, out, cond))
            if mode is GenerationMode.latent_warp and coupling is not None:
                warped = warp_channels(prev_latents[s].reshape(size, size, -1), coupling.flow)
                x = np.float32(cfg.alpha) * x + np.float32(1.0 - cfg.alpha) * warped.reshape(x.shape)
            if mode is GenerationMode.latent_warp:
                cur_latents.append(x)
            logger.debug("frame %d step %d done", i, s)

        frames.append(denoiser.decode(x, width, height))
        if i == 0:
            anchor_features = cur_features
        prev_features, prev_attention, prev_latents = cur_features, cur_attention, cur_latents
        logger.info("Frame %d generated", i)

    return FrameSequence(
        frames=frames,
        recorded_attention=recorded,
        config={
            "mode": mode.value,
            "prompt": prompt,
            "float": cfg.model_dump(mode="json"),
            "denoiser": denoiser.settings.model_dump(mode="json"),
        },
    )


__all__ = [
    "CLI_MODE_NAMES",
    "AttentionSink",
    "FrameSequence",
    "GenerationMode",
    "generate_sequence",
]
