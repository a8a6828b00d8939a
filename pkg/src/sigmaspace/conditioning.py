"""Conditioning inputs: XDoG line sketch, TPS-warped and rotated reference,
and their channel-wise concatenation into a 4-channel condition image."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionError, FormatError, SingularSystem
from .imaging import ImageBuffer, to_grayscale


@dataclass(frozen=True)
class XdogParams:
    sigma_small: float = 0.8
    k: float = 1.6
    tau: float = 0.98
    epsilon: float = 0.0
    phi_sharpness: float = 10.0

    def __post_init__(self):
        if self.sigma_small <= 0:
            raise ValueError("sigma_small must be positive")
        if self.k <= 1:
            raise ValueError("k must be > 1")
        if self.phi_sharpness <= 0:
            raise ValueError("phi_sharpness must be positive")


@dataclass(frozen=True)
class TpsWarpParams:
    grid: int = 4
    jitter_std: float = 0.03
    rotation_range: float = 15.0

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError("grid must be >= 2")
        if self.jitter_std < 0:
            raise ValueError("jitter_std must be >= 0")
        if not 0 <= self.rotation_range <= 45:
            raise ValueError("rotation_range must lie in [0, 45] degrees")


def xdog_sketch(image: ImageBuffer, params: XdogParams = XdogParams()) -> ImageBuffer:
    """Soft-thresholded difference of Gaussians; white on flat areas, dark lines at edges."""
    if min(image.height, image.width) < 3:
        raise DimensionError("xdog needs an image of at least 3x3 pixels")
    if image.channels == 4:
        image = ImageBuffer(image.data[:, :, :3])
    gray = to_grayscale(image).data[:, :, 0]
    g1 = ndimage.gaussian_filter(gray, params.sigma_small, mode="nearest")
    g2 = ndimage.gaussian_filter(gray, params.sigma_small * params.k, mode="nearest")
    d = g1 - params.tau * g2
    out = np.where(d >= params.epsilon, 1.0,
                   1.0 + np.tanh(params.phi_sharpness * (d - params.epsilon)))
    return ImageBuffer(out)


# ------------------------------------------------------------------ resampling

def _resample(image: ImageBuffer, rows: np.ndarray, cols: np.ndarray) -> ImageBuffer:
    """Bilinear lookup at fractional (row, col); outside samples clamp to the border."""
    h, w, c = image.shape
    rows = np.clip(rows, 0.0, h - 1.0)
    cols = np.clip(cols, 0.0, w - 1.0)
    out = np.empty((h, w, c))
    for ch in range(c):
        out[:, :, ch] = ndimage.map_coordinates(image.data[:, :, ch], [rows, cols], order=1, mode="nearest")
    return ImageBuffer(out)


def rotate(image: ImageBuffer, angle_degrees: float) -> ImageBuffer:
    """Rotate counter-clockwise about the image centre (bilinear, border replicate)."""
    if angle_degrees % 360.0 == 0.0:
        return ImageBuffer(image.data)
    h, w, _ = image.shape
    theta = math.radians(angle_degrees)
    ct, st = math.cos(theta), math.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    # inverse map: output pixel looks up the input rotated by -theta (y axis points down)
    src_x = cx + ct * dx - st * dy
    src_y = cy + st * dx + ct * dy
    return _resample(image, src_y, src_x)


def _tps_kernel(r2: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        u = r2 * np.log(r2)
    return np.where(r2 > 0, u, 0.0)


class ThinPlateSpline:
    """2-D thin-plate interpolant mapping ``src`` control points onto ``dst``."""

    def __init__(self, src: np.ndarray, dst: np.ndarray):
        src = np.asarray(src, dtype=np.float64)
        dst = np.asarray(dst, dtype=np.float64)
        n = src.shape[0]
        d2 = ((src[:, None, :] - src[None, :, :]) ** 2).sum(-1)
        system = np.zeros((n + 3, n + 3))
        system[:n, :n] = _tps_kernel(d2)
        system[:n, n] = 1.0
        system[:n, n + 1:] = src
        system[n, :n] = 1.0
        system[n + 1:, :n] = src.T
        rhs = np.zeros((n + 3, 2))
        rhs[:n] = dst
        try:
            if np.linalg.cond(system) > 1e12:
                raise np.linalg.LinAlgError("ill-conditioned control configuration")
            self.coef = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
        self.src = src

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        n = self.src.shape[0]
        d2 = ((pts[:, None, :] - self.src[None, :, :]) ** 2).sum(-1)
        w, a = self.coef[:n], self.coef[n:]
        return _tps_kernel(d2) @ w + a[0] + pts @ a[1:]


def _control_grid(h: int, w: int, grid: int) -> np.ndarray:
    ys = np.linspace(0.0, h - 1.0, grid)
    xs = np.linspace(0.0, w - 1.0, grid)
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def tps_warp(image: ImageBuffer, params: TpsWarpParams, rng: np.random.Generator) -> ImageBuffer:
    """Smooth random local warp from jittered control points.

    Targets are the grid sources plus Gaussian jitter of ``jitter_std * side``
    pixels. Resampling uses the spline fitted from targets back to sources,
    so every output pixel knows where to read from.
    """
    if params.jitter_std == 0:
        return ImageBuffer(image.data)
    h, w, _ = image.shape
    src = _control_grid(h, w, params.grid)
    scale = params.jitter_std * np.array([w, h], dtype=np.float64)
    for attempt in range(2):
        dst = src + rng.standard_normal(src.shape) * scale
        try:
            spline = ThinPlateSpline(dst, src)
            break
        except SingularSystem:
            if attempt == 1:
                raise
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    back = spline(np.column_stack([xx.ravel(), yy.ravel()]))
    return _resample(image, back[:, 1].reshape(h, w), back[:, 0].reshape(h, w))


def make_reference(image: ImageBuffer, params: TpsWarpParams, rng: np.random.Generator) -> ImageBuffer:
    """TPS warp followed by a rotation drawn uniformly from ``±rotation_range``."""
    warped = tps_warp(image, params, rng)
    angle = rng.uniform(-params.rotation_range, params.rotation_range) if params.rotation_range else 0.0
    return rotate(warped, angle)


def build_cond(reference: ImageBuffer, sketch: ImageBuffer) -> ImageBuffer:
    """Stack a 3-channel reference and a 1-channel sketch into R, G, B, sketch."""
    if reference.channels != 3:
        raise FormatError(f"reference must have 3 channels, got {reference.channels}")
    if sketch.channels != 1:
        raise FormatError(f"sketch must have 1 channel, got {sketch.channels}")
    if reference.shape[:2] != sketch.shape[:2]:
        raise DimensionError(
            f"reference is {reference.width}x{reference.height}, sketch is {sketch.width}x{sketch.height}"
        )
    return ImageBuffer(np.concatenate([reference.data, sketch.data], axis=2))


def decompose_cond(cond: ImageBuffer) -> tuple[ImageBuffer, ImageBuffer]:
    if cond.channels != 4:
        raise FormatError(f"condition image must have 4 channels, got {cond.channels}")
    return ImageBuffer(cond.data[:, :, :3]), ImageBuffer(cond.data[:, :, 3:])
