"""Toy denoising pipeline with hooked, manipulable self-attention."""

from __future__ import annotations

from .denoiser import DenoiserSettings, ToyDenoiser, build_from_settings, build_toy_denoiser
from .dump import attention_path, read_tensor, write_tensor
from .pipeline import (
    CLI_MODE_NAMES,
    AttentionSink,
    FrameSequence,
    GenerationMode,
    generate_sequence,
)


__all__ = [
    "CLI_MODE_NAMES",
    "AttentionSink",
    "DenoiserSettings",
    "FrameSequence",
    "GenerationMode",
    "ToyDenoiser",
    "attention_path",
    "build_from_settings",
    "build_toy_denoiser",
    "generate_sequence",
    "read_tensor",
    "write_tensor",
]
