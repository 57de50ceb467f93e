"""flowattn configuration module.

Two layers of configuration, both built on Pydantic Settings:

- :class:`Settings` holds process-level options (application name, log
  level and format) read from the environment and ``.env``; it is exported
  as the ``settings`` singleton.
- :class:`RunConfig` describes one reproducible run: the attention
  manipulation knobs, flow estimator, synthetic scene, toy denoiser, seed,
  prompt and paths. Values are resolved with the precedence
  command-line flags > YAML config file > ``FLOWATTN_*`` environment >
  defaults, and the effective config is dumped next to every output.

License:
    Apache 2.0
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .attention.types import FloatConfig
from .errors import ConfigError, UnwritablePathError
from .flow.types import FlowParams
from .synth.cloth import ClothSceneParams
from .toygen.denoiser import DenoiserSettings
from .toygen.pipeline import GenerationMode


logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


class Settings(BaseSettings):
    """Process-level settings with environment variable support.

    Attributes:
        APP_NAME: Name used in log records.
        LOG_LEVEL: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).
        LOG_JSON: Emit JSON log records when True, plain text otherwise.

    Example:
        >>> settings = Settings()
        >>> print(settings.APP_NAME)
        'flowattn'
    """

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=False, extra="ignore",
    )

    APP_NAME: str = "flowattn"
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = True


class PathSettings(BaseModel):
    """Input and output locations of a run.

    Attributes:
        normals: Directory of input normal-map PNGs.
        flows: Optional directory of ``NNNN.flo`` files matching the normals.
        out: Output directory (``frames/``, ``attn/``, ``report.txt``...).
    """

    normals: str | None = None
    flows: str | None = None
    out: str = "out"


class RunConfig(BaseSettings):
    """Complete, documented-default configuration of one run.

    Attributes:
        mode: Generation mode (``plain``, ``featin``, ``featin-mask``,
            ``float``, ``latent-warp`` or the enum values).
        seed: Master seed; overrides the denoiser and scene seeds.
        prompt: Text prompt hashed into the toy denoiser.
        attention: Flow-guided attention manipulation knobs.
        flow: Optical flow estimator parameters.
        synth: Synthetic cloth scene.
        denoiser: Toy denoiser shape and schedule.
        paths: Input and output locations.
        k: Anchor count of Self-SSIM.
        flow_peak: PSNR peak for flow components, pixels.
        alphas: Alpha values swept by ``ablate``.
        record_attention: Write hooked attention dumps during ``gen``.
    """

    model_config = SettingsConfigDict(
        env_prefix="FLOWATTN_",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="forbid",
    )

    mode: GenerationMode = GenerationMode.float
    seed: int = Field(default=0, ge=0)
    prompt: str = "a cloth waving in the wind"
    attention: FloatConfig = Field(default_factory=FloatConfig)
    flow: FlowParams = Field(default_factory=FlowParams)
    synth: ClothSceneParams = Field(default_factory=ClothSceneParams)
    denoiser: DenoiserSettings = Field(default_factory=DenoiserSettings)
    paths: PathSettings = Field(default_factory=PathSettings)
    k: int = Field(default=10, ge=1)
    flow_peak: float = Field(default=20.0, gt=0.0)
    alphas: list[float] = Field(default_factory=lambda: list(DEFAULT_ALPHAS))
    record_attention: bool = True

    @field_validator("mode", mode="before")
    @classmethod
    def _parse_mode(cls, value: Any) -> Any:
        if isinstance(value, str):
            return GenerationMode.from_cli(value)
        return value

    @field_validator("alphas")
    @classmethod
    def _check_alphas(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("alphas must not be empty")
        if any(not 0.0 <= a <= 1.0 for a in value):
            raise ValueError(f"alphas must lie in [0, 1], got {value}")
        return value

    def denoiser_settings(self) -> DenoiserSettings:
        """Denoiser settings carrying the master seed."""
        return self.denoiser.model_copy(update={"seed": self.seed})

    def scene_params(self) -> ClothSceneParams:
        """Scene parameters carrying the master seed."""
        return self.synth.model_copy(update={"seed": self.seed})

    @classmethod
    def from_yaml(
        cls,
        path: str | Path | None = None,
        overrides: Mapping[str, Any] | None = None,
    ) -> RunConfig:
        """Load a run configuration.

        Args:
            path: Optional YAML file; missing keys keep their defaults.
            overrides: Nested values (typically command-line flags) applied
                on top of the file.

        Returns:
            RunConfig: The validated configuration.

        Raises:
            ConfigError: The file is missing, is not a YAML mapping, or
                a value fails validation.

        Example:
            >>> cfg = RunConfig.from_yaml("configs/settings.yaml", {"attention": {"alpha": 0.6}})
            >>> cfg.attention.alpha
            0.6
        """
        data: dict[str, Any] = {}
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise ConfigError(f"config file not found: {path}")
            try:
                loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
            except yaml.YAMLError as e:
                raise ConfigError(f"cannot parse {path}: {e}") from e
            if loaded is None:
                loaded = {}
            if not isinstance(loaded, dict):
                raise ConfigError(f"{path} must hold a mapping, got {type(loaded).__name__}")
            data = loaded
        merged = deep_merge(data, overrides or {})
        try:
            return cls(**merged)
        except ValidationError as e:
            raise ConfigError(f"invalid configuration: {e}") from e

    def to_yaml(self) -> str:
        """The effective configuration as YAML."""
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)

    def dump(self, path: str | Path) -> None:
        """Write :meth:`to_yaml` to ``path``."""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_yaml(), encoding="utf-8")
        except OSError as e:
            raise UnwritablePathError(f"cannot write {path}: {e}") from e


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    """Recursively merge ``override`` into a copy of ``base``; ``None`` values are skipped."""
    merged = dict(base)
    for key, value in override.items():
        if value is None:
            continue
        if isinstance(value, Mapping):
            current = merged.get(key)
            merged[key] = deep_merge(current if isinstance(current, Mapping) else {}, value)
        else:
            merged[key] = value
    return merged


# Instantiate settings once and export as singleton
settings: Settings = Settings()

__all__ = ["DEFAULT_ALPHAS", "PathSettings", "RunConfig", "Settings", "deep_merge", "settings"]
