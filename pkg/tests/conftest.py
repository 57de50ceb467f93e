"""Shared fixtures: a small cloth scene and a small toy denoiser."""

from __future__ import annotations

import numpy as np
import pytest

from flowattn.synth.cloth import ClothSceneParams, gen_cloth_sequence
from flowattn.toygen.denoiser import ToyDenoiser, build_toy_denoiser


SIZE = 64
LATENT = 16
CHANNELS = 32


@pytest.fixture(scope="session")
def scene() -> ClothSceneParams:
    return ClothSceneParams(width=SIZE, height=SIZE, frames=4, phase_velocity=1.0, seed=3)


@pytest.fixture(scope="session")
def cloth(scene):
    return gen_cloth_sequence(scene)


@pytest.fixture(scope="session")
def denoiser() -> ToyDenoiser:
    return build_toy_denoiser(
        seed=7, latent_size=LATENT, channels=CHANNELS, steps=4, key_dim=16,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
