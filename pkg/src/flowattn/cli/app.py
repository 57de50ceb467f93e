"""Command-line entry point.

``flowattn <subcommand> [flags]`` with subcommands ``synth``, ``flow``,
``mask``, ``warp``, ``gen``, ``metrics``, ``viz`` and ``ablate``. Every
subcommand accepts ``--config path.yaml``; flags override the file, the
file overrides ``FLOWATTN_*`` environment variables, and those override
the built-in defaults shown by ``--help``.

Exit codes: 0 on success, 1 for invalid configuration or a failed
operation, 2 for usage errors (unknown or missing subcommand).

License:
    Apache 2.0
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from typing import Any

from ..attention.types import FloatConfig, FlowDirection
from ..config import DEFAULT_ALPHAS, PathSettings, RunConfig, settings
from ..errors import ConfigError, FlowAttnError
from ..flow.types import FlowParams
from ..logging import setup_logging
from ..synth.cloth import ClothSceneParams
from ..toygen.denoiser import DenoiserSettings
from ..toygen.pipeline import CLI_MODE_NAMES
from ..viz.pca import DEFAULT_COLORMAP
from . import commands


logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace, RunConfig], int]

# argparse dest -> RunConfig path
FLAG_PATHS: dict[str, tuple[str, ...]] = {
    "seed": ("seed",),
    "prompt": ("prompt",),
    "mode": ("mode",),
    "k": ("k",),
    "flow_peak": ("flow_peak",),
    "alphas": ("alphas",),
    "alpha": ("attention", "alpha"),
    "threshold": ("attention", "threshold"),
    "inject_frac": ("attention", "inject_fraction"),
    "recombine_frac": ("attention", "recombine_fraction"),
    "flow_direction": ("attention", "flow_direction"),
    "levels": ("flow", "pyramid_levels"),
    "iters": ("flow", "iterations_per_level"),
    "smooth": ("flow", "smoothness_weight"),
    "frames": ("synth", "frames"),
    "width": ("synth", "width"),
    "height": ("synth", "height"),
    "amplitude": ("synth", "wave_amplitude"),
    "wave_count": ("synth", "wave_count"),
    "velocity": ("synth", "phase_velocity"),
    "steps": ("denoiser", "steps"),
    "latent_size": ("denoiser", "latent_size"),
    "channels": ("denoiser", "channels"),
    "cond_weight": ("denoiser", "cond_weight"),
    "normals": ("paths", "normals"),
    "flows": ("paths", "flows"),
    "out": ("paths", "out"),
    "record_attention": ("record_attention",),
}

_FLOAT = FloatConfig()
_FLOW = FlowParams()
_SCENE = ClothSceneParams()
_DENOISER = DenoiserSettings()
_PATHS = PathSettings()


def _alphas(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"alphas must be comma-separated numbers: {text!r}") from e


def _option(
    parser: argparse.ArgumentParser,
    flag: str,
    default: Any,
    help_text: str,
    **kwargs: Any,
) -> None:
    """Add a config-backed flag; ``None`` means "not given" so lower layers apply."""
    parser.add_argument(flag, default=None, help=f"{help_text} (default: {default})", **kwargs)


def _common() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", default=None, help="YAML run configuration (default: none)")
    parent.add_argument(
        "--log-level", default=None, help=f"logging level (default: {settings.LOG_LEVEL})",
    )
    _option(parent, "--seed", 0, "master seed", type=int)
    return parent


def _flow_flags(parser: argparse.ArgumentParser) -> None:
    _option(parser, "--levels", _FLOW.pyramid_levels, "pyramid levels", type=int)
    _option(parser, "--iters", _FLOW.iterations_per_level, "iterations per level", type=int)
    _option(parser, "--smooth", _FLOW.smoothness_weight, "relative Tikhonov damping", type=float)


def _scene_flags(parser: argparse.ArgumentParser) -> None:
    _option(parser, "--frames", _SCENE.frames, "number of frames", type=int)
    _option(parser, "--width", _SCENE.width, "image width", type=int)
    _option(parser, "--height", _SCENE.height, "image height", type=int)
    _option(parser, "--amplitude", _SCENE.wave_amplitude, "wave amplitude", type=float)
    _option(parser, "--wave-count", _SCENE.wave_count, "wave periods across the width", type=float)
    _option(parser, "--velocity", _SCENE.phase_velocity, "phase velocity, px/frame", type=float)


def _generation_flags(parser: argparse.ArgumentParser) -> None:
    _option(parser, "--normals", _PATHS.normals, "directory of input normal maps")
    _option(parser, "--flows", _PATHS.flows, "directory of NNNN.flo files (estimated if absent)")
    _option(parser, "--prompt", "a cloth waving in the wind", "text prompt")
    _option(parser, "--alpha", _FLOAT.alpha, "weight of the current attention", type=float)
    _option(parser, "--threshold", _FLOAT.threshold, "motion threshold, px", type=float)
    _option(parser, "--inject-frac", _FLOAT.inject_fraction, "share of steps with KV injection", type=float)
    _option(
        parser,
        "--recombine-frac",
        _FLOAT.recombine_fraction,
        "share of steps with recombination",
        type=float,
    )
    _option(
        parser,
        "--flow-direction",
        _FLOAT.flow_direction.value,
        "convention of the flows",
        choices=[d.value for d in FlowDirection],
    )
    _option(parser, "--steps", _DENOISER.steps, "denoising steps", type=int)
    _option(parser, "--latent-size", _DENOISER.latent_size, "latent grid side", type=int)
    _option(parser, "--channels", _DENOISER.channels, "attention channels", type=int)
    _option(parser, "--cond-weight", _DENOISER.cond_weight, "conditioning strength", type=float)
    _option(parser, "--k", 10, "Self-SSIM anchor count", type=int)
    _flow_flags(parser)


def build_parser() -> argparse.ArgumentParser:
    """Build the ``flowattn`` argument parser."""
    parser = argparse.ArgumentParser(
        prog="flowattn",
        description="Flow-guided self-attention manipulation for normal-map sequences.",
    )
    sub = parser.add_subparsers(dest="command", metavar="{synth,flow,mask,warp,gen,metrics,viz,ablate}")
    common = _common()

    def add(name: str, handler: Handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(handler=handler)
        return p

    p = add("synth", commands.cmd_synth, "write a synthetic normal-map sequence")
    p.add_argument("--kind", choices=["cloth", "translation"], default="cloth", help="scene type (default: cloth)")
    p.add_argument("--vx", type=float, default=1.0, help="translation velocity x, px/frame (default: 1.0)")
    p.add_argument("--vy", type=float, default=0.0, help="translation velocity y, px/frame (default: 0.0)")
    _scene_flags(p)
    _option(p, "--out", _PATHS.out, "output directory")

    p = add("flow", commands.cmd_flow, "estimate optical flow between two normal maps")
    p.add_argument("--a", required=True, help="first normal-map image")
    p.add_argument("--b", required=True, help="second normal-map image")
    p.add_argument("--out", dest="out_file", required=True, help="output .flo file")
    p.add_argument("--color", default=None, help="optional flow visualization PNG")
    _flow_flags(p)

    p = add("mask", commands.cmd_mask, "threshold a flow into a motion mask")
    p.add_argument("--flo", required=True, help="input .flo file")
    p.add_argument("--out", dest="out_file", required=True, help="output mask PNG")
    _option(p, "--threshold", _FLOAT.threshold, "motion threshold, px", type=float)

    p = add("warp", commands.cmd_warp, "backward-warp an image along a flow")
    p.add_argument("--field", required=True, help="image to warp")
    p.add_argument("--flo", required=True, help="input .flo file")
    p.add_argument("--out", dest="out_file", required=True, help="output PNG")

    p = add("gen", commands.cmd_gen, "generate frames with the toy denoiser")
    _generation_flags(p)
    _option(p, "--mode", "float", "generation mode", choices=list(CLI_MODE_NAMES))
    _option(p, "--out", _PATHS.out, "output directory")
    p.add_argument(
        "--no-attn",
        dest="record_attention",
        action="store_const",
        const=False,
        default=None,
        help="skip writing attention dumps (default: dumps are written)",
    )

    p = add("metrics", commands.cmd_metrics, "evaluate frames and estimated normals")
    p.add_argument("--frames", dest="frames_dir", default=None, help="directory of generated frames")
    _option(p, "--normals", _PATHS.normals, "directory of input normal maps")
    p.add_argument("--estimated", default=None, help="directory of estimated normal maps")
    p.add_argument(
        "--external",
        action="append",
        default=None,
        metavar="NAME=VALUE",
        help="externally computed score (self_lpips, clip_text, clip_consistency)",
    )
    _option(p, "--k", 10, "Self-SSIM anchor count", type=int)
    _option(p, "--flow-peak", 20.0, "PSNR peak for flows, px", type=float)
    _option(p, "--out", _PATHS.out, "output directory")
    _flow_flags(p)

    p = add("viz", commands.cmd_viz, "render attention dumps and flows")
    targets = p.add_subparsers(dest="target", required=True)
    attn = targets.add_parser("attn", help="PCA heatmap of a .tns dump")
    attn.add_argument("--dump", required=True, help="attention tensor dump")
    attn.add_argument("--out", dest="out_file", required=True, help="output PNG")
    attn.add_argument("--colormap", default=DEFAULT_COLORMAP, help=f"matplotlib colormap (default: {DEFAULT_COLORMAP})")
    flow = targets.add_parser("flow", help="color-coded .flo file")
    flow.add_argument("--flo", required=True, help="input .flo file")
    flow.add_argument("--out", dest="out_file", required=True, help="output PNG")

    p = add("ablate", commands.cmd_ablate, "sweep alpha and report Self-SSIM")
    _generation_flags(p)
    _scene_flags(p)
    _option(
        p,
        "--alphas",
        ",".join(str(a) for a in DEFAULT_ALPHAS),
        "comma-separated alpha values",
        type=_alphas,
    )
    _option(p, "--out", _PATHS.out, "output directory")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Nested RunConfig overrides for the flags that were given."""
    nested: dict[str, Any] = {}
    for dest, path in FLAG_PATHS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        target = nested
        for key in path[:-1]:
            target = target.setdefault(key, {})
        target[path[-1]] = value
    return nested


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code.

    Example:
        >>> run(["synth", "--frames", "8", "--out", "d"])
        0
    """
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if getattr(args, "handler", None) is None:
        parser.print_usage(sys.stderr)
        return 2

    setup_logging(args.log_level or settings.LOG_LEVEL, json_format=settings.LOG_JSON)
    try:
        cfg = RunConfig.from_yaml(args.config, overrides_from_args(args))
        logger.info("Effective configuration", extra={"config": cfg.model_dump(mode="json")})
        return int(args.handler(args, cfg))
    except ConfigError as e:
        print(f"flowattn: configuration error: {e}", file=sys.stderr)
        return 1
    except FlowAttnError as e:
        print(f"flowattn {args.command}: {e}", file=sys.stderr)
        return 1


__all__ = ["FLAG_PATHS", "build_parser", "overrides_from_args", "run"]
