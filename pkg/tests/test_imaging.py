import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfsr.degradation import DegradationSpec, synthesize
from mfsr.errors import DimensionError, InputError
from mfsr.degradation import ObservationSet
from mfsr.imaging import Image, bilinear_sample, initial_estimate, new_image


@pytest.mark.parametrize("w,h,fill", [(2, 2, 0.0), (1, 1, 255.0), (3, 2, 7.5)])
def test_new_image_fill(w, h, fill):
    img = new_image(w, h, fill)
    assert (img.width, img.height) == (w, h)
    assert img.data.size == w * h
    assert np.all(img.data == fill)


@pytest.mark.parametrize("w,h", [(0, 2), (2, 0), (-1, 3)])
def test_new_image_rejects_bad_dims(w, h):
    with pytest.raises(DimensionError):
        new_image(w, h)


def test_image_is_immutable_and_finite():
    img = Image(np.ones((2, 3)))
    with pytest.raises(ValueError):
        img.data[0, 0] = 5
    with pytest.raises(ValueError):
        Image(np.array([[1.0, np.nan]]))


def test_bilinear_node_midpoint_and_edge():
    img = Image(np.arange(12.0).reshape(3, 4))
    assert bilinear_sample(img, 1, 1) == img.data[1, 1]
    two = Image(np.array([[0.0, 10.0]]))
    assert bilinear_sample(two, 0.5, 0) == 5.0
    assert bilinear_sample(img, -3.0, 0) == img.data[0, 0]
    assert bilinear_sample(img, 10.0, 1.0) == img.data[1, 3]


coords = st.floats(-5, 15, allow_nan=False)


@given(c=st.floats(-1e3, 1e3, allow_nan=False), x=coords, y=coords)
def test_bilinear_exact_on_constants(c, x, y):
    img = new_image(5, 4, c)
    assert bilinear_sample(img, x, y) == pytest.approx(c, abs=1e-9 * (1 + abs(c)))


@settings(max_examples=200)
@given(x=st.floats(0, 4, allow_nan=False), y=st.floats(0, 3, allow_nan=False))
def test_bilinear_bounded_by_neighbours(x, y):
    img = Image(np.random.default_rng(0).uniform(0, 255, (4, 5)))
    v = bilinear_sample(img, x, y)
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    block = img.data[y0 : min(y0 + 2, 4), x0 : min(x0 + 2, 5)]
    assert block.min() - 1e-9 <= v <= block.max() + 1e-9


def test_initial_estimate_constant():
    hr = new_image(16, 16, 50.0)
    obs = synthesize(hr, 1, DegradationSpec(decimation=(2, 2)))
    est = initial_estimate(obs, (2, 2))
    np.testing.assert_allclose(est.data, 50.0, atol=1e-12)


def test_initial_estimate_constant_with_shifted_blurred_frames():
    hr = new_image(16, 16, 80.0)
    obs = synthesize(hr, 3, DegradationSpec(blur_length=3, blur_angle=30, decimation=(2, 2), seed=2), shift_range=4)
    np.testing.assert_allclose(initial_estimate(obs, (2, 2)).data, 80.0, atol=1e-9)


def test_initial_estimate_duplicate_frames_match_single():
    hr = Image(np.random.default_rng(1).uniform(0, 255, (8, 8)))
    one = synthesize(hr, 1, DegradationSpec(decimation=(2, 2)), shifts=[(0.3, -0.2)])
    two = ObservationSet(one.frames * 2, 0.0, hr.shape)
    np.testing.assert_allclose(initial_estimate(two, (2, 2)).data, initial_estimate(one, (2, 2)).data, atol=1e-12)


def _ramp_1d_oracle(f, shift, factor=2):
    """Estimate of one row: warp by ``shift``, box-mean, interpolate back, in plain scalars."""
    n = len(f)

    def lerp(vals, t):
        t = min(max(t, 0.0), len(vals) - 1.0)
        i = min(int(t), len(vals) - 2)
        return vals[i] + (t - i) * (vals[i + 1] - vals[i])

    warped = [lerp(f, x + shift) for x in range(n)]
    lr = [sum(warped[factor * i : factor * i + factor]) / factor for i in range(n // factor)]
    return [lerp(lr, (x - shift - (factor - 1) / 2) / factor) for x in range(n)]


def test_initial_estimate_ramp_opposite_shifts():
    yy, xx = np.mgrid[0:8, 0:8].astype(float)
    hr = Image(50.0 + xx)
    obs = synthesize(hr, 2, DegradationSpec(decimation=(2, 2)), shifts=[(0.25, 0.0), (-0.25, 0.0)])
    est = initial_estimate(obs, (2, 2)).data
    row = list(hr.data[0])
    expected = (np.array(_ramp_1d_oracle(row, 0.25)) + np.array(_ramp_1d_oracle(row, -0.25))) / 2
    np.testing.assert_allclose(est, np.tile(expected, (8, 1)), atol=1e-12)
    assert np.max(np.abs(est - hr.data)) <= 1.0
    # away from the clamped border samples the ramp is reproduced exactly
    np.testing.assert_allclose(est[:, 3:5], hr.data[:, 3:5], atol=1e-12)


def test_initial_estimate_empty():
    with pytest.raises(InputError):
        initial_estimate(ObservationSet([], 0.0, (4, 4)), (2, 2))
