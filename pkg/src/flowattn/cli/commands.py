"""Subcommand handlers.

Each handler receives the parsed arguments and the effective
:class:`RunConfig` and returns a process exit code. Handlers raise
:class:`FlowAttnError` variants for the runner to report.

License:
    Apache 2.0
"""

from __future__ import annotations

import argparse
import json
import logging
import math
from pathlib import Path

import numpy as np

from ..attention.types import AttentionTensor, FloatConfig
from ..config import RunConfig
from ..errors import InvalidParameterError, ShapeMismatchError, UnwritablePathError
from ..flow.estimate import estimate_flow
from ..flow.flo import read_flo, write_flo
from ..flow.mask import compute_mask, mask_to_array
from ..flow.types import FlowField
from ..imaging.io import (
    frame_path,
    load_image,
    load_image_sequence,
    load_normal_image,
    load_normal_sequence,
    save_image,
    save_normal_image,
    save_sequence,
)
from ..imaging.types import Image, NormalMap
from ..metrics.report import MetricReport
from ..metrics.sequence import normal_condition_metrics, self_ssim, temporal_variance
from ..synth.cloth import background_region, gen_cloth_sequence
from ..synth.translation import gen_random_normal_map, gen_translation_sequence
from ..toygen.denoiser import build_from_settings
from ..toygen.dump import attention_path, read_tensor, write_tensor
from ..toygen.pipeline import AttentionSink, FrameSequence, GenerationMode, generate_sequence
from ..viz.flow_color import flow_to_color
from ..viz.pca import heatmap_to_image, pca_first_component
from ..warp.bilinear import warp_channels


logger = logging.getLogger(__name__)

FLOW_PATTERN = "{index:04d}.flo"


def _out_dir(cfg: RunConfig) -> Path:
    return Path(cfg.paths.out)


def _effective_k(k: int, n_frames: int) -> int:
    if k > n_frames:
        logger.warning("Clamping Self-SSIM k from %d to the %d available frames", k, n_frames)
        return n_frames
    return k


def _load_flows(directory: str | Path, normals: list[NormalMap]) -> list[FlowField]:
    """Read ``NNNN.flo`` for frames 1..N-1; frame 0 gets the zero field."""
    first = normals[0]
    flows = [FlowField.zeros(first.width, first.height)]
    for index in range(1, len(normals)):
        flows.append(read_flo(Path(directory) / FLOW_PATTERN.format(index=index)))
    return flows


def cmd_synth(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Write a synthetic normal-map sequence and its ground-truth flows."""
    out = _out_dir(cfg)
    params = cfg.scene_params()
    if args.kind == "translation":
        base = gen_random_normal_map(params.width, params.height, seed=cfg.seed)
        normals, flows = gen_translation_sequence(base, (args.vx, args.vy), params.frames)
    else:
        normals, flows = gen_cloth_sequence(params)

    for index, (normal_map, flow) in enumerate(zip(normals, flows, strict=True)):
        save_normal_image(normal_map, frame_path(out, index))
        if index > 0:
            write_flo(flow, out / "flows" / FLOW_PATTERN.format(index=index))
    logger.info("Wrote %d %s frames to %s", len(normals), args.kind, out)
    return 0


def cmd_flow(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Estimate the flow taking image ``--a`` to image ``--b``."""
    flow = estimate_flow(load_normal_image(args.a), load_normal_image(args.b), cfg.flow)
    write_flo(flow, args.out_file)
    if args.color:
        save_image(flow_to_color(flow), args.color)
    logger.info(
        "Estimated flow",
        extra={"out": str(args.out_file), "max_magnitude": float(flow.magnitude().max())},
    )
    return 0


def cmd_mask(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Threshold a ``.flo`` file into a motion mask image."""
    mask = compute_mask(read_flo(args.flo), cfg.attention.threshold)
    save_image(Image(data=mask_to_array(mask)), args.out_file)
    logger.info("Mask covers %d moving pixels", int(mask.values.sum()))
    return 0


def cmd_warp(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Backward-warp an image along a ``.flo`` field."""
    field = load_image(args.field)
    flow = read_flo(args.flo)
    if (field.height, field.width) != flow.shape:
        raise ShapeMismatchError(f"image {field.height}x{field.width} vs flow {flow.shape}")
    save_image(Image(data=warp_channels(field.data, flow)), args.out_file)
    return 0


def _attention_writer(directory: Path) -> AttentionSink:
    def sink(frame: int, step: int, tensor: AttentionTensor) -> None:
        write_tensor(tensor, attention_path(directory, frame, step))

    return sink


def _generate(
    cfg: RunConfig,
    normals: list[NormalMap],
    flows: list[FlowField] | None,
    attention: FloatConfig,
    mode: GenerationMode,
    attn_dir: Path | None = None,
) -> FrameSequence:
    denoiser = build_from_settings(cfg.denoiser_settings())
    return generate_sequence(
        normals,
        cfg.prompt,
        denoiser,
        mode,
        attention,
        flows=flows,
        flow_params=cfg.flow,
        record=False,
        attention_sink=_attention_writer(attn_dir) if attn_dir is not None else None,
    )


def cmd_gen(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Generate frames from a normal-map directory."""
    if cfg.paths.normals is None:
        raise InvalidParameterError("gen needs --normals (or paths.normals in the config)")
    out = _out_dir(cfg)
    normals = load_normal_sequence(cfg.paths.normals)
    if not normals:
        raise InvalidParameterError(f"no normal maps in {cfg.paths.normals}")
    flows = _load_flows(cfg.paths.flows, normals) if cfg.paths.flows else None
    cfg.dump(out / "config.yaml")

    attn_dir = out / "attn" if cfg.record_attention else None
    sequence = _generate(cfg, normals, flows, cfg.attention, cfg.mode, attn_dir)
    save_sequence(sequence.frames, out / "frames")

    k = _effective_k(cfg.k, len(sequence))
    report = MetricReport(self_ssim=self_ssim(sequence, k), k=k, flow_peak=cfg.flow_peak)
    report.write(out / "report.txt", out / "metrics.json")
    logger.info("Generated %d frames into %s", len(sequence), out)
    return 0


def _parse_external(pairs: list[str] | None) -> dict[str, float]:
    values: dict[str, float] = {}
    for pair in pairs or []:
        key, sep, raw = pair.partition("=")
        if not sep:
            raise InvalidParameterError(f"external metric {pair!r} must look like name=value")
        try:
            values[key.strip()] = float(raw)
        except ValueError as e:
            raise InvalidParameterError(f"external metric {pair!r} has a non-numeric value") from e
    return values


def cmd_metrics(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Evaluate generated frames and/or estimated normals."""
    if args.frames_dir is None and (cfg.paths.normals is None or args.estimated is None):
        raise InvalidParameterError("metrics needs --frames and/or --normals with --estimated")
    report = MetricReport(flow_peak=cfg.flow_peak)
    if cfg.paths.normals is not None and args.estimated is not None:
        given = load_normal_sequence(cfg.paths.normals)
        estimated = load_image_sequence(args.estimated)
        report = normal_condition_metrics(given, estimated, cfg.flow, cfg.flow_peak)
    if args.frames_dir is not None:
        frames = load_image_sequence(args.frames_dir)
        if not frames:
            raise InvalidParameterError(f"no frames in {args.frames_dir}")
        k = _effective_k(cfg.k, len(frames))
        report = report.model_copy(
            update={"self_ssim": self_ssim(frames, k), "k": k},
        )
    report = report.merge_external(_parse_external(args.external))

    out = _out_dir(cfg)
    report.write(out / "report.txt", out / "metrics.json")
    print(report.to_text(), end="")
    return 0


def cmd_viz(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Render an attention dump or a flow file."""
    if args.target == "attn":
        heatmap = pca_first_component(read_tensor(args.dump), colormap=args.colormap)
        save_image(heatmap_to_image(heatmap), args.out_file)
        logger.info(
            "Rendered attention heatmap",
            extra={
                "explained_variance": heatmap.explained_variance,
                "low_signal": heatmap.low_signal,
                "degenerate": heatmap.degenerate,
            },
        )
    else:
        save_image(flow_to_color(read_flo(args.flo)), args.out_file)
    return 0


def _ablation_inputs(
    cfg: RunConfig,
) -> tuple[list[NormalMap], list[FlowField] | None, np.ndarray | None]:
    if cfg.paths.normals is None:
        params = cfg.scene_params()
        normals, flows = gen_cloth_sequence(params)
        margin = 2 * math.ceil(params.width / cfg.denoiser.latent_size)
        return normals, flows, background_region(params, margin)
    normals = load_normal_sequence(cfg.paths.normals)
    if not normals:
        raise InvalidParameterError(f"no normal maps in {cfg.paths.normals}")
    flows = _load_flows(cfg.paths.flows, normals) if cfg.paths.flows else None
    return normals, flows, None


def _static_region(
    normals: list[NormalMap],
    flows: list[FlowField] | None,
    cfg: RunConfig,
) -> np.ndarray | None:
    moving = np.zeros(normals[0].shape, dtype=bool)
    for i in range(1, len(normals)):
        if flows is not None:
            flow = flows[i]
        else:
            flow = estimate_flow(normals[i - 1], normals[i], cfg.flow)
        moving |= compute_mask(flow, cfg.attention.threshold).values.astype(bool)
    return None if moving.all() else ~moving


def cmd_ablate(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Sweep alpha in float mode and report Self-SSIM and background variance."""
    normals, flows, region = _ablation_inputs(cfg)
    if region is None:
        region = _static_region(normals, flows, cfg)
    k = _effective_k(cfg.k, len(normals))

    rows = []
    for alpha in cfg.alphas:
        attention = cfg.attention.model_copy(update={"alpha": alpha})
        sequence = _generate(cfg, normals, flows, attention, GenerationMode.float)
        rows.append(
            {
                "alpha": alpha,
                "self_ssim": self_ssim(sequence, k),
                "background_variance": temporal_variance(sequence, region),
            },
        )
        logger.info("Ablation point", extra=rows[-1])

    out = _out_dir(cfg)
    lines = ["alpha  self_ssim  background_variance"]
    lines += [
        f"{r['alpha']:.2f}  {r['self_ssim']:.6f}  {r['background_variance']:.6e}" for r in rows
    ]
    text = "\n".join(lines) + "\n"
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text, encoding="utf-8")
        (out / "ablation.json").write_text(json.dumps({"k": k, "rows": rows}, indent=2), "utf-8")
    except OSError as e:
        raise UnwritablePathError(f"cannot write ablation report: {e}") from e
    cfg.dump(out / "config.yaml")
    print(text, end="")
    return 0


__all__ = [
    "cmd_ablate",
    "cmd_flow",
    "cmd_gen",
    "cmd_mask",
    "cmd_metrics",
    "cmd_synth",
    "cmd_viz",
    "cmd_warp",
]
