import time

import numpy as np
import pytest

from flowattn.attention import AttentionTensor, FloatConfig, HookSelector
from flowattn.errors import InputNotFoundError, InvalidParameterError, ShapeMismatchError, TensorDumpError
from flowattn.imaging import NormalMap
from flowattn.metrics import self_ssim, temporal_variance
from flowattn.synth import ClothSceneParams, background_region, gen_cloth_sequence
from flowattn.toygen import (
    GenerationMode,
    attention_path,
    build_toy_denoiser,
    generate_sequence,
    read_tensor,
    write_tensor,
)
from flowattn.toygen.dump import decode_tensor, encode_tensor


PROMPT = "a cloth waving in the wind"


def _frames(sequence) -> np.ndarray:
    return np.stack([frame.data for frame in sequence.frames])


def _generate(cloth, denoiser, mode, cfg=None, **kwargs):
    normals, flows = cloth
    return generate_sequence(normals, PROMPT, denoiser, mode, cfg, flows=flows, **kwargs)


@pytest.mark.unit
def test_build_is_deterministic():
    a = build_toy_denoiser(seed=5, latent_size=8, channels=16, steps=2)
    b = build_toy_denoiser(seed=5, latent_size=8, channels=16, steps=2)
    c = build_toy_denoiser(seed=6, latent_size=8, channels=16, steps=2)
    assert np.array_equal(a.w_in, b.w_in)
    assert np.array_equal(a.layer_projections[0].w_q, b.layer_projections[0].w_q)
    assert np.array_equal(a.initial_latent(), b.initial_latent())
    assert not np.array_equal(a.w_in, c.w_in)
    assert a.w_in.dtype == np.float32


@pytest.mark.unit
def test_build_rejects_empty_dimensions():
    with pytest.raises(InvalidParameterError):
        build_toy_denoiser(latent_size=0)
    with pytest.raises(InvalidParameterError):
        build_toy_denoiser(latent_size=4, channels=8, steps=0)
    with pytest.raises(InvalidParameterError):
        build_toy_denoiser(latent_size=4, channels=8, blocks=0)


@pytest.mark.unit
def test_hook_index_counts_from_the_end():
    den = build_toy_denoiser(latent_size=4, channels=8, steps=1, blocks=2, layers_per_block=3)
    assert len(den.layer_projections) == 6
    assert den.hook_index(HookSelector()) == 5
    assert den.hook_index(HookSelector(block=0, layer=1)) == 1
    with pytest.raises(InvalidParameterError):
        den.hook_index(HookSelector(block=2, layer=0))


@pytest.mark.unit
def test_prompt_embedding_depends_on_prompt(denoiser):
    first = denoiser.prompt_embedding("flag")
    assert np.array_equal(first, denoiser.prompt_embedding("flag"))
    assert not np.array_equal(first, denoiser.prompt_embedding("sail"))


@pytest.mark.unit
def test_flat_normals_give_no_conditioning(denoiser):
    assert not denoiser.condition(NormalMap.flat(64, 64)).any()
    tilted = NormalMap(normals=np.broadcast_to([0.6, 0.0, 0.8], (64, 64, 3)))
    assert np.allclose(denoiser.condition(tilted), [0.6, 0.0, -0.2], atol=1e-6)


def test_cloth_motion_reaches_the_frames(scene, cloth, denoiser):
    frames = _frames(_generate(cloth, denoiser, GenerationMode.plain))
    region = scene.region.contains_mask(scene.width, scene.height)
    change = np.abs(frames[1] - frames[0])[region].mean()
    assert change > 0.01


def test_stacked_layers_generate(cloth):
    den = build_toy_denoiser(
        seed=2, latent_size=16, channels=24, steps=2, feature_dim=8, key_dim=8, layers_per_block=2,
    )
    sequence = _generate(cloth, den, GenerationMode.float)
    assert len(sequence) == 4
    assert sequence.recorded_attention[(1, 0)].shape == (16, 16, 24)
    assert _frames(sequence).max() <= 1.0


@pytest.mark.unit
def test_mode_names():
    assert GenerationMode.from_cli("featin") is GenerationMode.feat_inject
    assert GenerationMode.from_cli("featin-mask") is GenerationMode.feat_inject_mask
    assert GenerationMode.from_cli("latent-warp") is GenerationMode.latent_warp
    assert GenerationMode.from_cli("float") is GenerationMode.float
    with pytest.raises(InvalidParameterError):
        GenerationMode.from_cli("warp")


def test_generation_shapes_and_range(cloth, denoiser):
    sequence = _generate(cloth, denoiser, GenerationMode.float)
    frames = _frames(sequence)
    assert frames.shape == (4, 64, 64, 3)
    assert frames.min() >= 0.0
    assert frames.max() <= 1.0
    assert sequence.config["mode"] == "float"
    assert sequence.config["denoiser"]["latent_size"] == 16


def test_generation_is_deterministic(cloth, denoiser):
    first = _generate(cloth, denoiser, GenerationMode.float)
    second = _generate(cloth, denoiser, GenerationMode.float)
    assert np.array_equal(_frames(first), _frames(second))


def test_plain_frames_are_independent(cloth, denoiser):
    normals, _ = cloth
    together = generate_sequence(normals[:3], PROMPT, denoiser, GenerationMode.plain)
    alone = generate_sequence(normals[1:3], PROMPT, denoiser, GenerationMode.plain)
    assert np.array_equal(together.frames[1].data, alone.frames[0].data)
    assert np.array_equal(together.frames[2].data, alone.frames[1].data)


def test_plain_on_identical_maps_repeats_the_frame(denoiser):
    normals = [NormalMap.flat(64, 64)] * 3
    sequence = generate_sequence(normals, PROMPT, denoiser, GenerationMode.plain)
    assert all(np.array_equal(f.data, sequence.frames[0].data) for f in sequence.frames)


def test_static_background_is_frozen_in_float_mode(scene, cloth, denoiser):
    sequence = _generate(cloth, denoiser, GenerationMode.float)
    region = background_region(scene, margin=8)
    anchor = sequence.frames[0].data[region]
    for frame in sequence.frames[1:]:
        np.testing.assert_allclose(frame.data[region], anchor, atol=1e-6)


def test_recorded_background_attention_matches_anchor(cloth, denoiser):
    sequence = _generate(cloth, denoiser, GenerationMode.float)
    background = np.ones((16, 16), dtype=bool)
    background[4:12, 4:12] = False
    for (frame, step), tensor in sequence.recorded_attention.items():
        anchor = sequence.recorded_attention[(0, step)]
        np.testing.assert_allclose(tensor.data[background], anchor.data[background], atol=1e-6)
        if frame > 0:
            assert not np.allclose(tensor.data[~background], anchor.data[~background])


def test_background_variance_ordering(scene, cloth, denoiser):
    region = background_region(scene, margin=8)
    variance = {
        mode: temporal_variance(_generate(cloth, denoiser, mode), region)
        for mode in (
            GenerationMode.plain,
            GenerationMode.feat_inject,
            GenerationMode.feat_inject_mask,
            GenerationMode.float,
        )
    }
    assert variance[GenerationMode.plain] > 1e-10
    assert variance[GenerationMode.float] < 1e-12
    assert variance[GenerationMode.float] <= variance[GenerationMode.feat_inject_mask] + 1e-12
    assert variance[GenerationMode.feat_inject_mask] <= variance[GenerationMode.feat_inject] + 1e-12
    assert variance[GenerationMode.feat_inject_mask] < variance[GenerationMode.plain]


def test_generation_is_causal(cloth, denoiser):
    normals, flows = cloth
    full = generate_sequence(normals, PROMPT, denoiser, GenerationMode.float, flows=flows)
    prefix = generate_sequence(normals[:3], PROMPT, denoiser, GenerationMode.float, flows=flows[:3])
    assert np.array_equal(_frames(full)[:3], _frames(prefix))


def test_float_with_full_alpha_matches_masked_injection(cloth, denoiser):
    float_run = _generate(cloth, denoiser, GenerationMode.float, FloatConfig(alpha=1.0))
    masked = _generate(cloth, denoiser, GenerationMode.feat_inject_mask)
    assert np.array_equal(_frames(float_run), _frames(masked))


def test_float_with_full_alpha_and_full_mask_is_feature_injection(cloth, denoiser):
    cfg = FloatConfig(alpha=1.0, threshold=0.0)
    float_run = _generate(cloth, denoiser, GenerationMode.float, cfg)
    injected = _generate(cloth, denoiser, GenerationMode.feat_inject, cfg)
    np.testing.assert_allclose(_frames(float_run), _frames(injected), atol=1e-6)


def test_masked_injection_ignores_alpha(cloth, denoiser):
    low = _generate(cloth, denoiser, GenerationMode.feat_inject_mask, FloatConfig(alpha=0.1))
    high = _generate(cloth, denoiser, GenerationMode.feat_inject_mask, FloatConfig(alpha=0.9))
    assert np.array_equal(_frames(low), _frames(high))


def test_float_without_recombination_is_feature_injection(cloth, denoiser):
    float_run = _generate(cloth, denoiser, GenerationMode.float, FloatConfig(recombine_fraction=0.0))
    injected = _generate(cloth, denoiser, GenerationMode.feat_inject)
    assert np.array_equal(_frames(float_run), _frames(injected))


def test_injection_without_steps_is_plain(cloth, denoiser):
    injected = _generate(cloth, denoiser, GenerationMode.feat_inject, FloatConfig(inject_fraction=0.0))
    plain = _generate(cloth, denoiser, GenerationMode.plain)
    assert np.array_equal(_frames(injected), _frames(plain))


def test_latent_warp_with_full_alpha_is_feature_injection(cloth, denoiser):
    warped = _generate(cloth, denoiser, GenerationMode.latent_warp, FloatConfig(alpha=1.0))
    injected = _generate(cloth, denoiser, GenerationMode.feat_inject)
    assert np.array_equal(_frames(warped), _frames(injected))


def test_injection_couples_frames(cloth, denoiser):
    plain = _frames(_generate(cloth, denoiser, GenerationMode.plain))
    injected = _frames(_generate(cloth, denoiser, GenerationMode.feat_inject))
    assert np.array_equal(plain[0], injected[0])
    assert not np.array_equal(plain[1:], injected[1:])


def test_estimated_flows_are_used_when_none_given(cloth, denoiser):
    normals, _ = cloth
    sequence = generate_sequence(normals[:2], PROMPT, denoiser, GenerationMode.float)
    assert len(sequence) == 2


def test_recording_and_sink(cloth, denoiser):
    seen = []
    sequence = _generate(
        cloth, denoiser, GenerationMode.float, attention_sink=lambda i, s, t: seen.append((i, s, t.shape)),
    )
    assert len(sequence.recorded_attention) == 4 * denoiser.steps
    assert sequence.recorded_attention[(3, 2)].shape == (16, 16, 32)
    assert [(i, s) for i, s, _ in seen] == [(i, s) for i in range(4) for s in range(denoiser.steps)]

    silent = _generate(cloth, denoiser, GenerationMode.plain, record=False)
    assert silent.recorded_attention == {}


def test_input_validation(cloth, denoiser):
    normals, flows = cloth
    with pytest.raises(InvalidParameterError):
        generate_sequence([], PROMPT, denoiser, GenerationMode.plain)
    with pytest.raises(InvalidParameterError):
        generate_sequence(normals[:1], PROMPT, denoiser, GenerationMode.plain)
    with pytest.raises(ShapeMismatchError):
        generate_sequence([normals[0], NormalMap.flat(32, 32)], PROMPT, denoiser, GenerationMode.plain)
    with pytest.raises(ShapeMismatchError):
        generate_sequence(normals, PROMPT, denoiser, GenerationMode.float, flows=flows[:2])
    with pytest.raises(InvalidParameterError):
        generate_sequence(
            normals, PROMPT, denoiser, GenerationMode.float, FloatConfig(hook=HookSelector(block=3)),
        )


@pytest.mark.unit
def test_tensor_dump_layout(tmp_path):
    tensor = AttentionTensor(data=np.arange(24, dtype=np.float32).reshape(2, 3, 4))
    blob = encode_tensor(tensor.data)
    assert blob[:4] == b"ATNS"
    assert np.frombuffer(blob, dtype="<i4", count=4, offset=4).tolist() == [3, 2, 3, 4]
    assert len(blob) == 4 + 16 + 24 * 4

    path = attention_path(tmp_path, 3, 7)
    assert path.name == "frame0003_step07.tns"
    write_tensor(tensor, path)
    assert np.array_equal(read_tensor(path).data, tensor.data)


@pytest.mark.unit
def test_tensor_dump_errors(tmp_path):
    with pytest.raises(TensorDumpError):
        decode_tensor(b"NOPE" + bytes(8))
    with pytest.raises(TensorDumpError):
        decode_tensor(encode_tensor(np.zeros((2, 2, 2)))[:-4])
    flat = tmp_path / "flat.tns"
    write_tensor(np.zeros((2, 3)), flat)
    with pytest.raises(TensorDumpError):
        read_tensor(flat)
    with pytest.raises(InputNotFoundError):
        read_tensor(tmp_path / "missing.tns")


def test_mode_ordering_holds_across_seeds():
    modes = (GenerationMode.feat_inject, GenerationMode.feat_inject_mask, GenerationMode.float)
    wins = {"self_ssim": 0, "float_below_mask": 0, "mask_below_inject": 0}
    for seed in range(10):
        scene = ClothSceneParams(width=64, height=64, frames=4, seed=seed)
        normals, flows = gen_cloth_sequence(scene)
        den = build_toy_denoiser(seed=seed, latent_size=16, channels=32, steps=4, key_dim=16)
        region = background_region(scene, margin=0)
        runs = {
            mode: generate_sequence(normals, PROMPT, den, mode, flows=flows, record=False)
            for mode in modes
        }
        variance = {mode: temporal_variance(runs[mode], region) for mode in modes}
        if self_ssim(runs[GenerationMode.float], 2) > self_ssim(runs[GenerationMode.feat_inject], 2):
            wins["self_ssim"] += 1
        if variance[GenerationMode.float] < variance[GenerationMode.feat_inject_mask]:
            wins["float_below_mask"] += 1
        if variance[GenerationMode.feat_inject_mask] < variance[GenerationMode.feat_inject]:
            wins["mask_below_inject"] += 1
    assert all(count >= 9 for count in wins.values()), wins


@pytest.mark.slow
def test_twenty_frame_full_size_run_freezes_background():
    params = ClothSceneParams(frames=20)
    normals, flows = gen_cloth_sequence(params)
    denoiser = build_toy_denoiser(seed=0)
    assert (denoiser.latent_size, denoiser.channels, denoiser.steps) == (64, 320, 20)

    background = np.ones((64, 64), dtype=bool)
    background[16:48, 16:48] = False
    anchors: dict[int, np.ndarray] = {}
    worst = 0.0

    def compare(frame: int, step: int, tensor: AttentionTensor) -> None:
        nonlocal worst
        if frame == 0:
            anchors[step] = tensor.data[background]
        else:
            worst = max(worst, float(np.abs(tensor.data[background] - anchors[step]).max()))

    start = time.perf_counter()
    sequence = generate_sequence(
        normals, PROMPT, denoiser, GenerationMode.float, flows=flows, record=False,
        attention_sink=compare,
    )
    elapsed = time.perf_counter() - start

    assert len(sequence) == 20
    assert len(anchors) == 20
    assert worst <= 1e-6
    region = background_region(params, margin=4)
    for frame in sequence.frames[1:]:
        np.testing.assert_allclose(frame.data[region], sequence.frames[0].data[region], atol=1e-4)
    assert elapsed < 60.0
