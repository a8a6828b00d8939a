"""SSIM, MS-SSIM and PSNR on :class:`~sigmaspace.imaging.ImageBuffer` values.

Local moments use a normalised Gaussian window evaluated only where it fits
entirely inside the image (no padding). The batched helpers
(:func:`ssim_batch`) exist for the profiling loop, which scores thousands of
noisy copies of the same clean image.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError, FormatError, ScaleError, WindowError
from .imaging import ImageBuffer, luma

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


class ChannelPolicy(str, enum.Enum):
    LUMA = "luma"
    PER_CHANNEL_MEAN = "per-channel-mean"


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    window_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0
    channel_policy: ChannelPolicy = ChannelPolicy.PER_CHANNEL_MEAN

    def __post_init__(self):
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError(f"window_size must be odd and >= 3, got {self.window_size}")
        if self.window_sigma <= 0:
            raise ValueError("window_sigma must be positive")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")
        object.__setattr__(self, "channel_policy", ChannelPolicy(self.channel_policy))

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


DEFAULT_SSIM = SsimParams()


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    coords = np.arange(size, dtype=np.float64) - size // 2
    g = np.exp(-(coords ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, win: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation over the last two axes."""
    x = sliding_window_view(x, win.size, axis=-2) @ win
    return sliding_window_view(x, win.size, axis=-1) @ win


def _planes(image: np.ndarray, policy: ChannelPolicy) -> np.ndarray:
    """(..., H, W, C) -> (..., C', H, W) planes per the channel policy."""
    if policy is ChannelPolicy.LUMA:
        c = image.shape[-1]
        if c == 3:
            image = luma(image)[..., None]
        elif c != 1:
            raise FormatError(f"luma policy needs 1 or 3 channels, got {c}")
    return np.moveaxis(image, -1, -3)


def _moments(x: np.ndarray, win: np.ndarray):
    mu = _filter_valid(x, win)
    sq = _filter_valid(x * x, win)
    return mu, sq - mu * mu


def _ssim_cs_maps(a, b, win, c1, c2, a_stats=None):
    mu_a, var_a = a_stats if a_stats is not None else _moments(a, win)
    mu_b, var_b = _moments(b, win)
    cov = _filter_valid(a * b, win) - mu_a * mu_b
    cs = (2.0 * cov + c2) / (var_a + var_b + c2)
    lum = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    return lum * cs, cs


def _check_pair(a: ImageBuffer, b: ImageBuffer, p: SsimParams):
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.height, a.width) < p.window_size:
        raise WindowError(
            f"image {a.width}x{a.height} is smaller than the {p.window_size}px window"
        )


def ssim(a: ImageBuffer, b: ImageBuffer, p: SsimParams = DEFAULT_SSIM) -> float:
    """Mean structural similarity over all valid windows."""
    _check_pair(a, b, p)
    pa = _planes(a.data, p.channel_policy)
    pb = _planes(b.data, p.channel_policy)
    win = gaussian_window(p.window_size, p.window_sigma)
    smap, _ = _ssim_cs_maps(pa, pb, win, p.c1, p.c2)
    return float(smap.mean(axis=(-2, -1)).mean())


class ReferenceStats:
    """Cached Gaussian moments of a clean image for repeated scoring.

    ``ssim_batch`` uses it to avoid refiltering the clean image for every
    noisy copy.
    """

    def __init__(self, clean: ImageBuffer, p: SsimParams = DEFAULT_SSIM):
        if min(clean.height, clean.width) < p.window_size:
            raise WindowError(
                f"image {clean.width}x{clean.height} is smaller than the {p.window_size}px window"
            )
        self.params = p
        self.shape = clean.shape
        self.win = gaussian_window(p.window_size, p.window_sigma)
        self.planes = _planes(clean.data, p.channel_policy)
        self.stats = _moments(self.planes, self.win)


def ssim_batch(ref: ReferenceStats, noisy: np.ndarray) -> np.ndarray:
    """SSIM of each image in ``noisy`` (shape ``(B, H, W, C)``, values in [0, 1]) against ``ref``."""
    noisy = np.asarray(noisy, dtype=np.float64)
    if noisy.shape[1:] != ref.shape:
        raise DimensionError(f"batch images have shape {noisy.shape[1:]}, expected {ref.shape}")
    p = ref.params
    pb = _planes(noisy, p.channel_policy)
    smap, _ = _ssim_cs_maps(ref.planes, pb, ref.win, p.c1, p.c2, a_stats=ref.stats)
    return smap.mean(axis=(-2, -1)).mean(axis=-1)


def _downsample2(x: np.ndarray) -> np.ndarray:
    h, w = x.shape[-2] // 2 * 2, x.shape[-1] // 2 * 2
    x = x[..., :h, :w]
    return 0.25 * (x[..., 0::2, 0::2] + x[..., 1::2, 0::2] + x[..., 0::2, 1::2] + x[..., 1::2, 1::2])


def ms_ssim(
    a: ImageBuffer,
    b: ImageBuffer,
    p: SsimParams = DEFAULT_SSIM,
    weights: Sequence[float] = MS_SSIM_WEIGHTS,
) -> float:
    """Multi-scale SSIM with dyadic 2x2 mean downsampling.

    Contrast-structure means from the finer scales and the full SSIM mean at
    the coarsest scale are combined as a weighted geometric product. Negative
    per-scale terms are clipped to zero before exponentiation; with a single
    scale the result is exactly :func:`ssim`.
    """
    weights = [float(w) for w in weights]
    if not weights:
        raise ScaleError("at least one scale weight is required")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    need = p.window_size * 2 ** (len(weights) - 1)
    if min(a.height, a.width) < need:
        raise ScaleError(
            f"{len(weights)} scales need a side of at least {need}px, image is {a.width}x{a.height}"
        )
    if len(weights) == 1:
        return ssim(a, b, p)

    pa = _planes(a.data, p.channel_policy)
    pb = _planes(b.data, p.channel_policy)
    win = gaussian_window(p.window_size, p.window_sigma)
    per_channel = np.ones(pa.shape[0])
    for level, w in enumerate(weights):
        smap, cs = _ssim_cs_maps(pa, pb, win, p.c1, p.c2)
        if level == len(weights) - 1:
            term = smap.mean(axis=(-2, -1))
        else:
            term = cs.mean(axis=(-2, -1))
            pa, pb = _downsample2(pa), _downsample2(pb)
        per_channel = per_channel * np.maximum(term, 0.0) ** w
    return float(per_channel.mean())


def psnr(a: ImageBuffer, b: ImageBuffer, dynamic_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` when the images are identical."""
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(dynamic_range ** 2 / mse)
