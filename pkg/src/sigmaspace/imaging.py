"""Image containers, PNG I/O, colour/range conversion and a synthetic corpus.

Two array types are used throughout the package:

* :class:`ImageBuffer` holds display-domain samples in ``[0, 1]``; it is what
  metrics and PNG I/O consume.
* :class:`DiffusionTensor` holds diffusion-domain samples (``2s - 1`` plus
  whatever noise has been added); values are unbounded but must be finite.

Both store an ``(height, width, channels)`` float64 array that is made
read-only on construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import DimensionError, FormatError, IoError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
_VALID_CHANNELS = (1, 3, 4)


def _as_hwc(data) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimensionError(f"expected an HxW or HxWxC array, got shape {arr.shape}")
    h, w, c = arr.shape
    if h < 1 or w < 1:
        raise DimensionError(f"image must be at least 1x1, got {w}x{h}")
    if c not in _VALID_CHANNELS:
        raise DimensionError(f"channels must be one of {_VALID_CHANNELS}, got {c}")
    return arr


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """H x W x C raster with every sample clamped into ``[0, 1]``."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_hwc(self.data)
        if np.isnan(arr).any():
            raise FormatError("image contains NaN samples")
        arr = np.clip(arr, 0.0, 1.0)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DiffusionTensor:
    """H x W x C samples in diffusion space; unbounded but finite."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise DimensionError(f"expected a non-empty HxWxC array, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise FormatError("diffusion tensor contains non-finite samples")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, DiffusionTensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


# --------------------------------------------------------------------------- I/O

def load_png(path) -> ImageBuffer:
    """Read an 8- or 16-bit grayscale, RGB or RGBA PNG into ``[0, 1]``."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(8)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if head != b"\x89PNG\r\n\x1a\n":
        raise FormatError(f"{path} is not a PNG file")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                arr = np.asarray(im, dtype=np.float64) / 255.0
            elif mode in ("RGB", "RGBA"):
                arr = np.asarray(im, dtype=np.float64) / 255.0
            elif mode in ("I;16", "I;16B", "I"):
                arr = np.asarray(im, dtype=np.float64) / 65535.0
            else:
                raise FormatError(f"unsupported PNG colour mode {mode!r} in {path}")
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path} could not be decoded as PNG") from exc
    except OSError as exc:
        raise IoError(f"cannot decode {path}: {exc}") from exc
    return ImageBuffer(arr)


def to_uint8(image: ImageBuffer) -> np.ndarray:
    return np.rint(image.data * 255.0).astype(np.uint8)


def save_png(image: ImageBuffer, path) -> None:
    """Write ``image`` as an 8-bit PNG, ``v = round(255 * s)``."""
    pixels = to_uint8(image)
    if image.channels == 1:
        pil = Image.fromarray(pixels[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(pixels, mode="RGB" if image.channels == 3 else "RGBA")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        pil.save(tmp, format="PNG")
        tmp.replace(path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoError(f"cannot write {path}: {exc}") from exc


# ------------------------------------------------------------------ conversions

def luma(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (..., 3) array, written relative to green so that
    grey pixels map to themselves exactly."""
    wr, _, wb = LUMA_WEIGHTS
    g = rgb[..., 1]
    return g + wr * (rgb[..., 0] - g) + wb * (rgb[..., 2] - g)


def to_grayscale(image: ImageBuffer) -> ImageBuffer:
    """BT.601 luma. Single-channel input is returned unchanged."""
    if image.channels == 1:
        return image
    if image.channels != 3:
        raise FormatError(f"to_grayscale needs 1 or 3 channels, got {image.channels}")
    return ImageBuffer(luma(image.data))


def to_diffusion(image: ImageBuffer) -> DiffusionTensor:
    return DiffusionTensor(2.0 * image.data - 1.0)


def from_diffusion(t: DiffusionTensor | np.ndarray) -> ImageBuffer:
    data = t.data if isinstance(t, DiffusionTensor) else np.asarray(t, dtype=np.float64)
    return ImageBuffer(np.clip((data + 1.0) / 2.0, 0.0, 1.0))


def make_grid(images: Sequence[ImageBuffer], rows: int, cols: int) -> ImageBuffer:
    """Tile ``images`` row-major into a ``rows x cols`` mosaic; empty cells stay black."""
    if rows < 1 or cols < 1:
        raise DimensionError("grid needs at least one row and one column")
    if len(images) > rows * cols:
        raise DimensionError(f"{len(images)} tiles do not fit a {rows}x{cols} grid")
    if not images:
        raise DimensionError("make_grid needs at least one tile to size the grid")
    h, w, c = images[0].shape
    out = np.zeros((rows * h, cols * w, c))
    for k, tile in enumerate(images):
        if tile.shape != (h, w, c):
            raise DimensionError(f"tile {k} has shape {tile.shape}, expected {(h, w, c)}")
        r, q = divmod(k, cols)
        out[r * h:(r + 1) * h, q * w:(q + 1) * w] = tile.data
    return ImageBuffer(out)


# ------------------------------------------------------------ synthetic corpus

def _synth_one(rng: np.random.Generator, size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)

    # smooth colour gradient background
    img = np.empty((size, size, 3))
    for ch in range(3):
        a, b, c = rng.uniform(-0.35, 0.35, size=3)
        img[:, :, ch] = 0.5 + a * (xx - 0.5) + b * (yy - 0.5) + c * (xx - 0.5) * (yy - 0.5)

    # flat-shaded ellipses
    for _ in range(rng.integers(3, 7)):
        cx, cy = rng.uniform(0.1, 0.9, size=2)
        rx, ry = rng.uniform(0.08, 0.35, size=2)
        theta = rng.uniform(0.0, np.pi)
        ct, st = np.cos(theta), np.sin(theta)
        u = ((xx - cx) * ct + (yy - cy) * st) / rx
        v = (-(xx - cx) * st + (yy - cy) * ct) / ry
        mask = u * u + v * v <= 1.0
        img[mask] = rng.uniform(0.05, 0.95, size=3)

    # fine band-limited texture under a smooth envelope, so flat and busy
    # regions coexist the way they do in illustrations
    noise = ndimage.gaussian_filter(rng.standard_normal((size, size)), sigma=size / 64.0, mode="wrap")
    noise /= noise.std() + 1e-12
    env = ndimage.gaussian_filter(rng.standard_normal((size, size)), sigma=size / 4.0, mode="wrap")
    env = (env - env.min()) / (np.ptp(env) + 1e-12)
    img += 0.4 * env[:, :, None] * noise[:, :, None] * rng.uniform(0.5, 1.0, size=3)

    return np.clip(img, 0.0, 1.0)


def synth_corpus(seed: int, count: int, size: int) -> list[ImageBuffer]:
    """Deterministic stand-in corpus of colour test images.

    Every image mixes a smooth gradient, a handful of flat ellipses and a
    band-limited texture so that local SSIM statistics are non-trivial.
    Images whose variance would fall below 0.005 are redrawn.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if size < 8:
        raise DimensionError("synthetic images need a side of at least 8 pixels")
    root = np.random.SeedSequence(seed)
    out = []
    for child in root.spawn(count):
        rng = np.random.default_rng(child)
        img = _synth_one(rng, size)
        while img.var() <= 0.005:
            img = _synth_one(rng, size)
        out.append(ImageBuffer(img))
    return out
