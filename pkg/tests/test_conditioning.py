import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from sigmaspace.conditioning import (
    ThinPlateSpline,
    TpsWarpParams,
    XdogParams,
    build_cond,
    decompose_cond,
    make_reference,
    rotate,
    tps_warp,
    xdog_sketch,
)
from sigmaspace.errors import DimensionError, FormatError, SingularSystem
from sigmaspace.imaging import ImageBuffer, synth_corpus
from sigmaspace.metrics import ssim


def test_xdog_constant_is_white():
    for v in (0.0, 0.3, 1.0):
        out = xdog_sketch(ImageBuffer(np.full((20, 20, 3), v)))
        assert out.channels == 1 and out.shape[:2] == (20, 20)
        assert out.data.min() >= 0.99


@pytest.mark.parametrize("c", [8, 15, 23])
def test_xdog_step_edge_location(c):
    img = np.zeros((32, 32))
    img[:, c:] = 1.0
    out = xdog_sketch(ImageBuffer(img)).data[:, :, 0]
    col = np.argmin(out[16])
    assert abs(col - c) <= 2
    assert out.min() < 0.5


def test_xdog_range_and_determinism(rgb_image):
    a = xdog_sketch(rgb_image)
    b = xdog_sketch(rgb_image)
    assert a == b
    assert a.data.min() >= 0.0 and a.data.max() <= 1.0
    rgba = ImageBuffer(np.concatenate([rgb_image.data, np.ones(rgb_image.shape[:2] + (1,))], axis=2))
    assert xdog_sketch(rgba) == a


def test_xdog_errors():
    with pytest.raises(DimensionError):
        xdog_sketch(ImageBuffer(np.zeros((2, 10))))
    for kw in (dict(sigma_small=0), dict(k=1.0), dict(phi_sharpness=0)):
        with pytest.raises(ValueError):
            XdogParams(**kw)


def test_rotate_zero_and_full_turn(rgb_image):
    assert rotate(rgb_image, 0.0) == rgb_image
    assert rotate(rgb_image, 360.0) == rgb_image
    assert rotate(rgb_image, -720.0) == rgb_image


def test_rotate_90_is_index_permutation(rng):
    x = rng.random((17, 17, 3))
    r = rotate(ImageBuffer(x), 90.0).data
    assert np.max(np.abs(r - np.rot90(x, 1))) < 1e-6
    r2 = rotate(ImageBuffer(x), -90.0).data
    assert np.max(np.abs(r2 - np.rot90(x, -1))) < 1e-6


@pytest.mark.parametrize("angle", [7.0, -12.5, 15.0])
def test_rotate_round_trip_interior(angle):
    img = synth_corpus(5, 1, 64)[0]
    smooth = ImageBuffer(ndimage.gaussian_filter(img.data, sigma=(1.5, 1.5, 0)))
    back = rotate(rotate(smooth, angle), -angle)
    crop = slice(16, 48)
    a = ImageBuffer(smooth.data[crop, crop])
    b = ImageBuffer(back.data[crop, crop])
    assert ssim(a, b) > 0.95


def test_tps_zero_jitter_identity(rgb_image):
    p = TpsWarpParams(jitter_std=0.0)
    assert tps_warp(rgb_image, p, np.random.default_rng(0)) == rgb_image
    ref = make_reference(rgb_image, TpsWarpParams(jitter_std=0.0, rotation_range=0.0), np.random.default_rng(0))
    assert ref == rgb_image


def test_tps_interpolates_control_points(rng):
    src = rng.random((9, 2)) * 30
    dst = src + rng.standard_normal((9, 2))
    spline = ThinPlateSpline(src, dst)
    np.testing.assert_allclose(spline(src), dst, atol=1e-8)
    affine = ThinPlateSpline(src, 2.0 * src + 3.0)
    probe = rng.random((20, 2)) * 30
    np.testing.assert_allclose(affine(probe), 2.0 * probe + 3.0, atol=1e-8)


def test_tps_singular():
    pts = np.column_stack([np.arange(5.0), np.arange(5.0)])  # collinear
    with pytest.raises(SingularSystem):
        ThinPlateSpline(pts, pts)


def test_tps_warp_mean_preserved_and_deterministic():
    p = TpsWarpParams()
    for k, img in enumerate(synth_corpus(1, 6, 64)):
        w = tps_warp(img, p, np.random.default_rng(k))
        assert abs(w.data.mean() - img.data.mean()) < 0.02
        assert w == tps_warp(img, p, np.random.default_rng(k))
        assert w != img


def test_warp_params_validation():
    for kw in (dict(grid=1), dict(jitter_std=-0.1), dict(rotation_range=50.0)):
        with pytest.raises(ValueError):
            TpsWarpParams(**kw)


def test_build_cond_exact_and_round_trip(rgb_image, rng):
    sketch = ImageBuffer(rng.random(rgb_image.shape[:2] + (1,)))
    cond = build_cond(rgb_image, sketch)
    assert cond.channels == 4
    assert np.array_equal(cond.data[:, :, :3], rgb_image.data)
    assert np.array_equal(cond.data[:, :, 3], sketch.data[:, :, 0])
    ref, sk = decompose_cond(cond)
    assert ref == rgb_image and sk == sketch


def test_build_cond_channel_order():
    h, w = 4, 5
    ref = ImageBuffer(np.stack([np.full((h, w), v) for v in (0.1, 0.2, 0.3)], axis=2))
    sk = ImageBuffer(np.full((h, w, 1), 0.4))
    cond = build_cond(ref, sk)
    assert cond.data[0, 0].tolist() == [0.1, 0.2, 0.3, 0.4]


def test_build_cond_errors(rgb_image):
    with pytest.raises(DimensionError):
        build_cond(rgb_image, ImageBuffer(np.ones((3, 3, 1))))
    with pytest.raises(FormatError):
        build_cond(ImageBuffer(np.ones((3, 3, 1))), ImageBuffer(np.ones((3, 3, 1))))
    with pytest.raises(FormatError):
        decompose_cond(rgb_image)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (12, 10, 3), elements=st.floats(0, 1)))
def test_xdog_output_bounds(data):
    out = xdog_sketch(ImageBuffer(data))
    assert out.shape == (12, 10, 1)
    assert np.all((out.data >= 0) & (out.data <= 1))
