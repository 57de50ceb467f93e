"""Metric report model and its text / JSON renderings."""

from __future__ import annotations

import math
from collections.abc import Mapping
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import InvalidParameterError, UnwritablePathError


EXTERNAL_FIELDS = ("self_lpips", "clip_text", "clip_consistency")


class MetricReport(BaseModel):
    """Quantitative evaluation of one generated sequence.

    Attributes:
        n_rmse: Frame-averaged RMSE between input and estimated normals
            (8-bit encoded).
        n_psnr: Frame-averaged PSNR for the same pairs, peak ``normal_peak``.
        f_rmse: Frame-averaged RMSE between flows of the input normals and
            flows of the estimated normals.
        f_psnr: Frame-averaged PSNR for the flows, peak ``flow_peak``.
        self_ssim: Self-SSIM of the generated frames.
        k: Anchor count used for ``self_ssim``.
        background_variance: Mean per-pixel variance across frames over
            the static background.
        self_lpips: Externally computed Self-LPIPS.
        clip_text: Externally computed prompt alignment score.
        clip_consistency: Externally computed frame consistency score.
        normal_peak: PSNR peak of encoded normals.
        flow_peak: PSNR peak of flow components, pixels.
    """

    model_config = ConfigDict(ser_json_inf_nan="constants", frozen=True)

    n_rmse: float | None = None
    n_psnr: float | None = None
    f_rmse: float | None = None
    f_psnr: float | None = None
    self_ssim: float | None = None
    k: int | None = None
    background_variance: float | None = None
    self_lpips: float | None = None
    clip_text: float | None = None
    clip_consistency: float | None = None
    normal_peak: float = Field(default=255.0, gt=0.0)
    flow_peak: float = Field(default=20.0, gt=0.0)

    @model_validator(mode="after")
    def _check_psnr(self) -> MetricReport:
        for error, ratio in ((self.n_rmse, self.n_psnr), (self.f_rmse, self.f_psnr)):
            if ratio is not None and math.isinf(ratio) and error not in (None, 0.0):
                raise ValueError("psnr may only be infinite when the rmse is 0")
        return self

    def merge_external(self, values: Mapping[str, float]) -> MetricReport:
        """Return a copy carrying scores computed by external networks.

        Raises:
            InvalidParameterError: A key is not one of :data:`EXTERNAL_FIELDS`.
        """
        unknown = sorted(set(values) - set(EXTERNAL_FIELDS))
        if unknown:
            raise InvalidParameterError(
                f"unknown external metrics {unknown}; expected {list(EXTERNAL_FIELDS)}",
            )
        return self.model_copy(update={key: float(v) for key, v in values.items()})

    def to_text(self) -> str:
        """Flat ``key = value`` lines for the fields that are set."""
        lines = []
        for key, value in self.model_dump(exclude_none=True).items():
            shown = f"{value:.6f}" if isinstance(value, float) and math.isfinite(value) else value
            lines.append(f"{key} = {shown}")
        return "\n".join(lines) + "\n"

    def write(self, text_path: str | Path, json_path: str | Path | None = None) -> None:
        """Write the text report and, optionally, its JSON form."""
        try:
            text_path = Path(text_path)
            text_path.parent.mkdir(parents=True, exist_ok=True)
            text_path.write_text(self.to_text(), encoding="utf-8")
            if json_path is not None:
                Path(json_path).write_text(self.model_dump_json(indent=2), encoding="utf-8")
        except OSError as e:
            raise UnwritablePathError(f"cannot write metric report: {e}") from e


__all__ = ["EXTERNAL_FIELDS", "MetricReport"]
