"""Noise-aware input/output scaling around a raw network.

``coeffs`` returns the four scalars for one noise level. ``compose_denoiser``
wraps a raw callable ``F(scaled_x, cond, c_noise)`` into a denoiser
``D(x, cond, sigma) = c_skip * x + c_out * F(c_in * x, cond, c_noise)``.

By default ``c_out = sigma / sqrt(sigma^2 + sigma_data^2)``. Passing
``edm_compat=True`` multiplies it by ``sigma_data``, as in the original EDM
parameterisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import transforms as T
from .errors import DomainError, ShapeError
from .imaging import DiffusionTensor
from .schedule import SIGMA_DATA
from .transforms import TransformSpec


@dataclass(frozen=True)
class PreconditionCoeffs:
    c_skip: float
    c_out: float
    c_in: float
    c_noise: float


@dataclass(frozen=True)
class QuarterLog:
    """``c_noise = ln(sigma) / 4``."""


@dataclass(frozen=True)
class PhiStar:
    spec: TransformSpec

    def __post_init__(self):
        if not self.spec.increasing:
            raise DomainError(f"noise embedding transform {self.spec} must be increasing")


NoiseEmbedPolicy = Union[QuarterLog, PhiStar]


def c_noise(sigma: float, policy: NoiseEmbedPolicy) -> float:
    if isinstance(policy, QuarterLog):
        return 0.25 * math.log(sigma)
    return float(T.apply(policy.spec, sigma))


def coeffs(
    sigma: float,
    sigma_data: float = SIGMA_DATA,
    policy: NoiseEmbedPolicy = QuarterLog(),
    edm_compat: bool = False,
) -> PreconditionCoeffs:
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive and finite, got {sigma}")
    if not (sigma_data > 0 and math.isfinite(sigma_data)):
        raise DomainError(f"sigma_data must be positive, got {sigma_data}")
    total = sigma * sigma + sigma_data * sigma_data
    root = math.sqrt(total)
    c_out = sigma / root
    if edm_compat:
        c_out *= sigma_data
    return PreconditionCoeffs(
        c_skip=sigma_data * sigma_data / total,
        c_out=c_out,
        c_in=1.0 / root,
        c_noise=c_noise(sigma, policy),
    )


RawNetwork = Callable[[np.ndarray, object, float], np.ndarray]


class ComposedDenoiser:
    """Denoiser built from a raw network and the preconditioning scalars."""

    def __init__(self, raw: RawNetwork, policy: NoiseEmbedPolicy = QuarterLog(),
                 sigma_data: float = SIGMA_DATA, edm_compat: bool = False):
        self.raw = raw
        self.policy = policy
        self.sigma_data = sigma_data
        self.edm_compat = edm_compat

    def __call__(self, x, cond, sigma: float):
        wrapped = isinstance(x, DiffusionTensor)
        data = x.data if wrapped else np.asarray(x, dtype=np.float64)
        k = coeffs(sigma, self.sigma_data, self.policy, self.edm_compat)
        f = np.asarray(self.raw(k.c_in * data, cond, k.c_noise), dtype=np.float64)
        if f.shape != data.shape:
            raise ShapeError(f"raw network returned shape {f.shape}, expected {data.shape}")
        out = k.c_skip * data + k.c_out * f
        return DiffusionTensor(out) if wrapped else out

    evaluate = __call__


def compose_denoiser(raw: RawNetwork, policy: NoiseEmbedPolicy = QuarterLog(),
                     sigma_data: float = SIGMA_DATA, edm_compat: bool = False) -> ComposedDenoiser:
    return ComposedDenoiser(raw, policy, sigma_data, edm_compat)
