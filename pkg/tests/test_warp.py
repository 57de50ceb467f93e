import math

import numpy as np
import pytest

from flowattn.errors import InvalidParameterError, ShapeMismatchError
from flowattn.flow import BinaryMask, FlowField
from flowattn.warp import (
    ScalarField,
    bilinear_warp,
    resample_flow,
    resample_mask,
    resize_bilinear,
    warp_channels,
)


pytestmark = pytest.mark.unit


def _naive_warp(values: np.ndarray, flow: np.ndarray) -> np.ndarray:
    height, width = values.shape
    out = np.empty_like(values)
    for y in range(height):
        for x in range(width):
            sx = min(max(x + flow[y, x, 0], 0.0), width - 1.0)
            sy = min(max(y + flow[y, x, 1], 0.0), height - 1.0)
            x0, y0 = math.floor(sx), math.floor(sy)
            x1, y1 = min(x0 + 1, width - 1), min(y0 + 1, height - 1)
            fx, fy = sx - x0, sy - y0
            top = (1 - fx) * values[y0, x0] + fx * values[y0, x1]
            bottom = (1 - fx) * values[y1, x0] + fx * values[y1, x1]
            out[y, x] = (1 - fy) * top + fy * bottom
    return out


@pytest.mark.parametrize("seed", range(100))
def test_bilinear_warp_matches_reference(seed):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((32, 32))
    flow = rng.uniform(-8.0, 8.0, size=(32, 32, 2))
    expected = _naive_warp(values, flow)
    warped = bilinear_warp(ScalarField(values=values), FlowField(vectors=flow))
    assert np.allclose(warped.values, expected, rtol=0.0, atol=1e-6)
    stacked = warp_channels(values[:, :, None], FlowField(vectors=flow))
    assert np.allclose(stacked[:, :, 0], expected, rtol=0.0, atol=1e-6)


def test_zero_flow_is_identity(rng):
    values = rng.standard_normal((5, 6))
    warped = bilinear_warp(ScalarField(values=values), FlowField.zeros(6, 5))
    assert np.array_equal(warped.values, values)


def test_constant_flow_on_ramp():
    ramp = ScalarField(values=np.tile(np.arange(4.0), (3, 1)))
    warped = bilinear_warp(ramp, FlowField.constant(4, 3, 0.5, 0.0))
    assert warped.values[1].tolist() == [0.5, 1.5, 2.5, 3.0]


def test_warp_channels_matches_per_channel(rng):
    array = rng.standard_normal((7, 8, 3))
    flow = FlowField(vectors=rng.uniform(-2.0, 2.0, size=(7, 8, 2)))
    stacked = warp_channels(array, flow)
    for c in range(3):
        single = bilinear_warp(ScalarField(values=array[:, :, c]), flow)
        assert np.allclose(stacked[:, :, c], single.values, atol=1e-12)


def test_warp_channels_keeps_float32():
    array = np.ones((4, 4, 2), dtype=np.float32)
    out = warp_channels(array, FlowField.constant(4, 4, 0.25, 0.0))
    assert out.dtype == np.float32


def test_warp_rejects_size_mismatch():
    with pytest.raises(ShapeMismatchError):
        bilinear_warp(ScalarField(values=np.zeros((3, 3))), FlowField.zeros(4, 3))
    with pytest.raises(ShapeMismatchError):
        warp_channels(np.zeros((3, 3, 2)), FlowField.zeros(4, 3))


def test_resize_block_mean_is_exact():
    array = np.arange(16.0).reshape(4, 4, 1)
    small = resize_bilinear(array, 2, 2)
    assert small[:, :, 0].tolist() == [[2.5, 4.5], [10.5, 12.5]]


def test_resample_flow_rescales_displacements():
    coarse = resample_flow(FlowField.constant(64, 32, 8.0, 4.0), 16, 8)
    assert coarse.shape == (8, 16)
    assert np.allclose(coarse.vectors, [2.0, 1.0])


def test_resample_flow_upsampling_rescales_too():
    fine = resample_flow(FlowField.constant(4, 4, 1.0, -1.0), 12, 8)
    assert np.allclose(fine.vectors, [3.0, -2.0])


def test_resample_mask_half_coverage_counts_as_moving():
    values = np.zeros((4, 4), dtype=np.uint8)
    values[0, :2] = 1
    values[2:, 2:] = 1
    values[2, 0] = 1
    coarse = resample_mask(BinaryMask(values=values), 2, 2)
    assert coarse.values.tolist() == [[1, 0], [0, 1]]


def test_resample_rejects_empty_target():
    with pytest.raises(InvalidParameterError):
        resample_flow(FlowField.zeros(4, 4), 0, 4)


def test_warp_is_linear_in_the_field(rng):
    f_values, g_values = rng.standard_normal((2, 10, 10))
    flow = FlowField(vectors=rng.uniform(-2.0, 2.0, (10, 10, 2)))
    combined = bilinear_warp(ScalarField(values=2.0 * f_values - 3.0 * g_values), flow).values
    separate = (
        2.0 * bilinear_warp(ScalarField(values=f_values), flow).values
        - 3.0 * bilinear_warp(ScalarField(values=g_values), flow).values
    )
    assert np.allclose(combined, separate, atol=1e-9)


def test_resampling_to_the_same_size_is_identity(rng):
    flow = FlowField(vectors=rng.standard_normal((5, 6, 2)))
    assert np.array_equal(resample_flow(flow, 6, 5).vectors, flow.vectors)
    ones = BinaryMask.full(6, 5, 1)
    assert resample_mask(ones, 3, 2).values.all()
    assert not resample_mask(BinaryMask.full(6, 5, 0), 4, 4).values.any()


def test_fractional_shrink_is_an_area_average():
    row = np.array([[0.0, 3.0, 6.0]])[:, :, None]
    small = resize_bilinear(row, 2, 1)
    assert np.allclose(small[0, :, 0], [1.0, 5.0])


def test_fractional_shrink_preserves_the_mean(rng):
    array = rng.uniform(0.0, 1.0, size=(10, 7, 2))
    small = resize_bilinear(array, 3, 4)
    assert small.shape == (4, 3, 2)
    assert np.allclose(small.mean(axis=(0, 1)), array.mean(axis=(0, 1)), atol=1e-12)
