import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from flowattn.errors import InvalidParameterError, ShapeMismatchError
from flowattn.imaging import Image, NormalMap, encode_normals
from flowattn.metrics import (
    MetricReport,
    anchor_indices,
    normal_condition_metrics,
    psnr,
    psnr_from_rmse,
    rmse,
    self_ssim,
    ssim,
    temporal_variance,
)


pytestmark = pytest.mark.unit


def _windowed_ssim(a: np.ndarray, b: np.ndarray, peak: float) -> float:
    taps = np.arange(-5, 6, dtype=np.float64)
    kernel_1d = np.exp(-0.5 * taps**2 / 1.5**2)
    kernel = np.outer(kernel_1d, kernel_1d)
    kernel /= kernel.sum()
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    height, width, channels = a.shape
    per_channel = []
    for ch in range(channels):
        scores = []
        for r in range(5, height - 5):
            for c in range(5, width - 5):
                x = a[r - 5 : r + 6, c - 5 : c + 6, ch]
                y = b[r - 5 : r + 6, c - 5 : c + 6, ch]
                mx, my = (kernel * x).sum(), (kernel * y).sum()
                vx = (kernel * x * x).sum() - mx * mx
                vy = (kernel * y * y).sum() - my * my
                cov = (kernel * x * y).sum() - mx * my
                scores.append(
                    ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)),
                )
        per_channel.append(np.mean(scores))
    return float(np.mean(per_channel))


def test_rmse_and_psnr_closed_form():
    base = Image(data=np.full((8, 8), 100.0))
    shifted = Image(data=base.data + 3.0)
    assert rmse(base, shifted) == pytest.approx(3.0)
    assert psnr(base, shifted, peak=255.0) == pytest.approx(20 * math.log10(85.0))
    assert round(psnr(base, shifted, peak=255.0), 2) == 38.59


def test_psnr_of_identical_images_is_infinite():
    img = Image(data=np.ones((4, 4)))
    assert math.isinf(psnr(img, img))
    with pytest.raises(InvalidParameterError):
        psnr_from_rmse(1.0, 0.0)


def test_ssim_matches_windowed_reference(rng):
    a = rng.uniform(0.0, 1.0, (16, 14, 2))
    b = np.clip(a + rng.normal(0.0, 0.1, a.shape), 0.0, 1.0)
    expected = _windowed_ssim(a, b, 1.0)
    assert ssim(Image(data=a), Image(data=b)) == pytest.approx(expected, rel=1e-6)


def test_ssim_identity_and_errors(rng):
    img = Image(data=rng.uniform(0.0, 1.0, (12, 12, 3)))
    assert ssim(img, img) == pytest.approx(1.0)
    with pytest.raises(InvalidParameterError):
        ssim(Image(data=np.zeros((10, 12))), Image(data=np.zeros((10, 12))))
    with pytest.raises(ShapeMismatchError):
        ssim(img, Image(data=np.zeros((12, 12, 1))))


def test_anchor_indices():
    assert anchor_indices(4, 3) == [0, 2, 3]
    assert anchor_indices(20, 10) == [0, 2, 4, 6, 8, 11, 13, 15, 17, 19]
    assert anchor_indices(5, 1) == [0]
    assert anchor_indices(3, 3) == [0, 1, 2]
    with pytest.raises(InvalidParameterError):
        anchor_indices(3, 4)


@pytest.fixture
def three_frames(rng):
    return [Image(data=rng.uniform(0.0, 1.0, (12, 12, 3))) for _ in range(3)]


def test_self_ssim_compares_frames_with_anchors(three_frames):
    f = three_frames
    assert self_ssim(f, k=2) == pytest.approx(np.mean([ssim(f[1], f[0]), ssim(f[1], f[2])]))
    assert self_ssim(f, k=1) == pytest.approx(np.mean([ssim(f[1], f[0]), ssim(f[2], f[0])]))


def test_self_ssim_with_all_anchors_uses_anchor_pairs(three_frames):
    f = three_frames
    expected = np.mean([ssim(f[0], f[1]), ssim(f[0], f[2]), ssim(f[1], f[2])])
    assert self_ssim(f, k=3) == pytest.approx(expected)


def test_self_ssim_edge_cases(three_frames):
    assert self_ssim(three_frames[:1], k=1) == 1.0
    assert self_ssim([three_frames[0]] * 4, k=2) == pytest.approx(1.0)
    with pytest.raises(InvalidParameterError):
        self_ssim([], k=1)
    with pytest.raises(InvalidParameterError):
        self_ssim(three_frames, k=4)


def _offset_estimate(normal_map: NormalMap, offset: int) -> Image:
    return Image(data=(encode_normals(normal_map).astype(np.float64) + offset) / 255.0)


def test_normal_metrics_constant_offset():
    inputs = [NormalMap.flat(16, 16)] * 3
    report = normal_condition_metrics(inputs, [_offset_estimate(n, -5) for n in inputs])
    assert report.n_rmse == pytest.approx(5.0)
    assert report.n_psnr == pytest.approx(20 * math.log10(51.0))
    assert report.f_rmse == 0.0
    assert math.isinf(report.f_psnr)


def test_normal_metrics_skip_exact_frames_in_psnr_average():
    inputs = [NormalMap.flat(16, 16)] * 2
    estimated = [inputs[0], _offset_estimate(inputs[1], -5)]
    report = normal_condition_metrics(inputs, estimated)
    assert report.n_rmse == pytest.approx(2.5)
    assert report.n_psnr == pytest.approx(20 * math.log10(51.0))


def test_normal_metrics_single_frame_has_no_flow_terms():
    report = normal_condition_metrics([NormalMap.flat(8, 8)], [NormalMap.flat(8, 8)])
    assert report.n_rmse == 0.0
    assert math.isinf(report.n_psnr)
    assert report.f_rmse is None


def test_normal_metrics_validate_inputs():
    with pytest.raises(ShapeMismatchError):
        normal_condition_metrics([NormalMap.flat(8, 8)], [])
    with pytest.raises(ShapeMismatchError):
        normal_condition_metrics([NormalMap.flat(8, 8)], [NormalMap.flat(8, 9)])
    with pytest.raises(InvalidParameterError):
        normal_condition_metrics([], [])


def test_temporal_variance():
    frames = [Image(data=np.full((4, 4, 3), v)) for v in (0.2, 0.4)]
    assert temporal_variance(frames) == pytest.approx(0.01)
    region = np.zeros((4, 4), dtype=bool)
    region[0, 0] = True
    assert temporal_variance(frames, region) == pytest.approx(0.01)
    with pytest.raises(InvalidParameterError):
        temporal_variance(frames, np.zeros((4, 4), dtype=bool))
    with pytest.raises(ShapeMismatchError):
        temporal_variance(frames, np.ones((3, 4), dtype=bool))


def test_report_text_and_json(tmp_path):
    report = MetricReport(n_rmse=0.0, n_psnr=math.inf, self_ssim=0.5, k=4)
    text = report.to_text()
    assert "n_psnr = inf" in text
    assert "self_ssim = 0.500000" in text
    assert "f_rmse" not in text

    report.write(tmp_path / "report.txt", tmp_path / "metrics.json")
    assert (tmp_path / "report.txt").read_text() == text
    data = json.loads((tmp_path / "metrics.json").read_text())
    assert data["n_psnr"] == math.inf
    assert data["k"] == 4


def test_report_external_scores():
    report = MetricReport(self_ssim=0.9).merge_external({"clip_text": 0.31})
    assert report.clip_text == pytest.approx(0.31)
    with pytest.raises(InvalidParameterError):
        report.merge_external({"fvd": 1.0})


def test_report_rejects_infinite_psnr_with_error():
    with pytest.raises(ValidationError):
        MetricReport(n_rmse=1.0, n_psnr=math.inf)


def test_rmse_of_a_single_saturated_pixel():
    a = np.zeros((16, 16))
    b = a.copy()
    b[3, 4] = 255.0
    assert rmse(Image(data=a), Image(data=b)) == pytest.approx(255.0 / 16.0)


def test_ssim_of_constant_images_closed_form():
    c1 = 0.01**2
    black, white = Image(data=np.zeros((11, 11))), Image(data=np.ones((11, 11)))
    assert ssim(black, white) == pytest.approx(c1 / (1.0 + c1))


def test_ssim_is_symmetric(rng):
    a = Image(data=rng.uniform(0.0, 1.0, (13, 13, 3)))
    b = Image(data=rng.uniform(0.0, 1.0, (13, 13, 3)))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-9)


def test_reversed_motion_is_caught_by_flow_metrics(cloth):
    normals, _ = cloth
    report = normal_condition_metrics(normals, list(reversed(normals)))
    assert report.f_rmse > 0.0
    assert math.isfinite(report.f_psnr)
