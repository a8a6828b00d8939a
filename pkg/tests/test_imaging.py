import numpy as np
import pytest
from PIL import Image

from sigmaspace.errors import DimensionError, FormatError, IoError
from sigmaspace.imaging import (
    DiffusionTensor,
    ImageBuffer,
    from_diffusion,
    load_png,
    make_grid,
    save_png,
    synth_corpus,
    to_diffusion,
    to_grayscale,
    to_uint8,
)


def test_samples_are_clamped_on_construction():
    img = ImageBuffer(np.array([[-0.5, 0.25, 1.5]]))
    assert img.data.ravel().tolist() == [0.0, 0.25, 1.0]
    assert (img.width, img.height, img.channels) == (3, 1, 1)


def test_buffer_is_read_only(rgb_image):
    with pytest.raises(ValueError):
        rgb_image.data[0, 0, 0] = 0.5


@pytest.mark.parametrize("shape", [(0, 4, 3), (4, 4, 2), (4, 4, 5), (4,)])
def test_bad_shapes_rejected(shape):
    with pytest.raises(DimensionError):
        ImageBuffer(np.zeros(shape))


def test_nan_rejected():
    with pytest.raises(FormatError):
        ImageBuffer(np.array([[np.nan]]))
    with pytest.raises(FormatError):
        DiffusionTensor(np.array([[np.inf]]))


def test_load_gray_full_scale(tmp_path):
    p = tmp_path / "g.png"
    Image.fromarray(np.array([[255]], dtype=np.uint8), mode="L").save(p)
    img = load_png(p)
    assert img.shape == (1, 1, 1)
    assert img.data[0, 0, 0] == 1.0


def test_load_rgb_linear_scaling(tmp_path):
    p = tmp_path / "c.png"
    Image.fromarray(np.array([[[0, 128, 255]]], dtype=np.uint8), mode="RGB").save(p)
    assert load_png(p).data.ravel().tolist() == [0.0, 128 / 255, 1.0]


def test_load_16bit_gray(tmp_path):
    p = tmp_path / "g16.png"
    Image.fromarray(np.array([[0, 65535, 32768]], dtype=np.uint16)).save(p)
    img = load_png(p)
    np.testing.assert_allclose(img.data.ravel(), [0.0, 1.0, 32768 / 65535])


def test_load_rgba(tmp_path):
    p = tmp_path / "a.png"
    px = np.array([[[10, 20, 30, 40]]], dtype=np.uint8)
    Image.fromarray(px, mode="RGBA").save(p)
    np.testing.assert_array_equal(load_png(p).data.ravel(), px.ravel() / 255.0)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(IoError):
        load_png(tmp_path / "nope.png")


def test_non_png_is_format_error(tmp_path):
    p = tmp_path / "x.png"
    p.write_bytes(b"GIF89a not a png")
    with pytest.raises(FormatError):
        load_png(p)


def test_palette_png_unsupported(tmp_path):
    p = tmp_path / "p.png"
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").convert("P").save(p)
    with pytest.raises(FormatError):
        load_png(p)


@pytest.mark.parametrize("channels", [1, 3, 4])
def test_png_round_trip_is_byte_identical(tmp_path, channels):
    rng = np.random.default_rng(channels)
    px = rng.integers(0, 256, size=(16, 16, channels), dtype=np.uint8)
    img = ImageBuffer(px / 255.0)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    save_png(img, a)
    again = load_png(a)
    np.testing.assert_array_equal(to_uint8(again), px)
    save_png(again, b)
    assert a.read_bytes() == b.read_bytes()


def test_grayscale_weights():
    white = ImageBuffer(np.ones((2, 2, 3)))
    assert np.all(to_grayscale(white).data == 1.0)
    red = ImageBuffer(np.array([[[1.0, 0.0, 0.0]]]))
    assert to_grayscale(red).data[0, 0, 0] == pytest.approx(0.299, abs=0)


def test_grayscale_identity_and_rgba_error():
    g = ImageBuffer(np.full((3, 3, 1), 0.3))
    assert to_grayscale(g) is g
    with pytest.raises(FormatError):
        to_grayscale(ImageBuffer(np.zeros((2, 2, 4))))


def test_diffusion_round_trip(rgb_image):
    t = to_diffusion(rgb_image)
    assert t.data.min() >= -1 and t.data.max() <= 1
    back = from_diffusion(t)
    np.testing.assert_allclose(back.data, rgb_image.data, atol=1e-15)
    np.testing.assert_array_equal(to_uint8(back), to_uint8(rgb_image))


def test_from_diffusion_clamps():
    out = from_diffusion(DiffusionTensor(np.array([[-3.0, 0.0, 5.0]])))
    assert out.data.ravel().tolist() == [0.0, 0.5, 1.0]


def test_make_grid_layout():
    tiles = [ImageBuffer(np.full((2, 3, 1), v)) for v in (0.1, 0.2, 0.3)]
    grid = make_grid(tiles, rows=2, cols=2)
    assert (grid.width, grid.height) == (2 * 3, 2 * 2)
    assert grid.data[0, 0, 0] == 0.1
    assert grid.data[0, 3, 0] == 0.2
    assert grid.data[2, 0, 0] == 0.3
    assert np.all(grid.data[2:, 3:] == 0.0)


def test_make_grid_errors():
    a = ImageBuffer(np.zeros((2, 2, 1)))
    b = ImageBuffer(np.zeros((3, 2, 1)))
    with pytest.raises(DimensionError):
        make_grid([a, b], 1, 2)
    with pytest.raises(DimensionError):
        make_grid([a, a, a], 1, 2)


def test_synth_corpus_deterministic():
    a = synth_corpus(7, 4, 64)
    b = synth_corpus(7, 4, 64)
    assert all(x == y for x, y in zip(a, b))
    assert synth_corpus(8, 1, 64)[0] != a[0]


def test_synth_corpus_nondegenerate():
    for img in synth_corpus(7, 8, 64):
        assert img.shape == (64, 64, 3)
        assert img.data.var() > 0.005


def test_synth_corpus_empty():
    assert synth_corpus(1, 0, 64) == []
