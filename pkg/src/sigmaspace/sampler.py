"""Deterministic reverse-time sampling of the probability-flow ODE.

The ODE ``dx/dsigma = (x - D(x; sigma)) / sigma`` is integrated from the top
of a descending schedule down to ``sigma = 0``. Any callable
``D(x, cond, sigma) -> array`` works as a denoiser.
:class:`GaussianOracleDenoiser` gives the exact posterior mean for Gaussian
data, so samplers can be checked without a trained network.

Step indices follow the ascending convention: the rollout visits
``i = N-1, ..., 0`` where ``sigma_{N-1}`` is the largest level, and each step
moves from ``sigma_i`` to ``sigma_{i-1}`` with ``sigma_{-1} = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import transforms as T
from .errors import DimensionError, NonFinite, ScheduleError
from .imaging import DiffusionTensor, ImageBuffer, from_diffusion
from .metrics import DEFAULT_SSIM, SsimParams, ssim
from .schedule import Order, SigmaSchedule
from .transforms import TransformSpec

Denoiser = Callable[[np.ndarray, object, float], np.ndarray]


class GaussianOracleDenoiser:
    """Posterior mean for data ~ N(mean, diag(variance)) under additive noise.

    ``D(x; sigma) = mean + variance / (variance + sigma^2) * (x - mean)``,
    broadcast over any leading batch axes of ``x``.
    """

    def __init__(self, mean, variance):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.variance = np.asarray(variance, dtype=np.float64)
        if not np.all(self.variance > 0):
            raise ValueError("oracle variances must be positive")
        try:
            np.broadcast_shapes(self.mean.shape, self.variance.shape)
        except ValueError:
            raise DimensionError("mean and variance shapes are not compatible") from None

    def __call__(self, x, cond, sigma: float):
        wrapped = isinstance(x, DiffusionTensor)
        data = x.data if wrapped else np.asarray(x, dtype=np.float64)
        gain = self.variance / (self.variance + sigma * sigma)
        out = self.mean + gain * (data - self.mean)
        return DiffusionTensor(out) if wrapped else out

    evaluate = __call__

    def score(self, x, sigma: float) -> np.ndarray:
        """Analytic score of the noised marginal, ``-(x - mean) / (variance + sigma^2)``."""
        return -(np.asarray(x) - self.mean) / (self.variance + sigma * sigma)

    def flow(self, x_start, sigma_start: float, sigma_end: float) -> np.ndarray:
        """Exact ODE transport of ``x_start`` from ``sigma_start`` to ``sigma_end``."""
        v = self.variance
        ratio = np.sqrt((v + sigma_end ** 2) / (v + sigma_start ** 2))
        return self.mean + ratio * (np.asarray(x_start, dtype=np.float64) - self.mean)


@dataclass
class StepRecord:
    i: int
    sigma: float
    snapshot: Optional[np.ndarray] = None
    ssim: Optional[float] = None


@dataclass
class RolloutTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass(frozen=True)
class TraceOptions:
    snapshots: bool = False
    reference: Optional[ImageBuffer] = None
    ssim_params: SsimParams = DEFAULT_SSIM


def initial_noise(shape, sigma_max: float, rng: np.random.Generator, unit_variance: bool = False) -> np.ndarray:
    """Pure-noise starting state; ``sigma_max * eps`` unless ``unit_variance``."""
    eps = rng.standard_normal(shape)
    return eps if unit_variance else sigma_max * eps


def _levels(schedule: SigmaSchedule) -> np.ndarray:
    if schedule.order is not Order.DESCENDING:
        raise ScheduleError("samplers consume descending schedules; call .descending() first")
    if not np.all(schedule.sigmas > 0):
        raise ScheduleError("sampler schedules must be strictly positive")
    return schedule.sigmas


def _record(trace, opts, i, sigma, x):
    if opts is None:
        return
    rec = StepRecord(i, float(sigma))
    if opts.snapshots:
        rec.snapshot = np.array(x, copy=True)
    if opts.reference is not None:
        rec.ssim = ssim(from_diffusion(x), opts.reference, opts.ssim_params)
    trace.records.append(rec)


def _guard(x, i):
    if not np.all(np.isfinite(x)):
        raise NonFinite(i)


def _unwrap(init):
    if isinstance(init, DiffusionTensor):
        return init.data.copy(), True
    return np.array(init, dtype=np.float64, copy=True), False


def _eval(denoiser, x, cond, sigma):
    d = denoiser(x, cond, sigma)
    d = d.data if isinstance(d, DiffusionTensor) else np.asarray(d, dtype=np.float64)
    if d.shape != x.shape:
        raise DimensionError(f"denoiser returned shape {d.shape}, expected {x.shape}")
    return d


def euler_rollout(denoiser: Denoiser, cond, schedule: SigmaSchedule, init,
                  trace_opts: TraceOptions | None = None, flip_sign: bool = False):
    """First-order integration; every step moves ``x`` toward the denoiser output.

    ``flip_sign`` reverses the update to ``x - dt/sigma * (D - x)``, which
    moves away from the data and is only useful for comparison.
    """
    sig = _levels(schedule)
    x, wrapped = _unwrap(init)
    trace = RolloutTrace()
    n = sig.size
    sign = -1.0 if flip_sign else 1.0
    for k in range(n):
        i = n - 1 - k
        s_cur = float(sig[k])
        s_next = float(sig[k + 1]) if k + 1 < n else 0.0
        _record(trace, trace_opts, i, s_cur, x)
        d = _eval(denoiser, x, cond, s_cur)
        x = x + sign * ((s_cur - s_next) / s_cur) * (d - x)
        _guard(x, i)
    return (DiffusionTensor(x) if wrapped else x), trace


def heun_rollout(denoiser: Denoiser, cond, schedule: SigmaSchedule, init,
                 trace_opts: TraceOptions | None = None):
    """Second-order (Heun) integration; the final step to sigma = 0 is a plain Euler step."""
    sig = _levels(schedule)
    x, wrapped = _unwrap(init)
    trace = RolloutTrace()
    n = sig.size
    for k in range(n):
        i = n - 1 - k
        s_cur = float(sig[k])
        s_next = float(sig[k + 1]) if k + 1 < n else 0.0
        _record(trace, trace_opts, i, s_cur, x)
        dt = s_cur - s_next
        d1 = (x - _eval(denoiser, x, cond, s_cur)) / s_cur
        x_euler = x - dt * d1
        if s_next > 0:
            d2 = (x_euler - _eval(denoiser, x_euler, cond, s_next)) / s_next
            x = x - dt * 0.5 * (d1 + d2)
        else:
            x = x_euler
        _guard(x, i)
    return (DiffusionTensor(x) if wrapped else x), trace


def score_estimate(denoiser: Denoiser, x, cond, sigma: float) -> np.ndarray:
    """Score approximation ``(D(x; sigma) - x) / sigma^2``."""
    data = x.data if isinstance(x, DiffusionTensor) else np.asarray(x, dtype=np.float64)
    return (_eval(denoiser, data, cond, sigma) - data) / (sigma * sigma)


def trajectory_ssim_curve(denoiser: Denoiser, cond, schedule: SigmaSchedule, init,
                          reference: ImageBuffer, spec: TransformSpec = T.PHI_STAR,
                          ssim_params: SsimParams = DEFAULT_SSIM):
    """``(phi(sigma_i), ssim)`` for every state visited by an Euler rollout."""
    opts = TraceOptions(snapshots=False, reference=reference, ssim_params=ssim_params)
    _, trace = euler_rollout(denoiser, cond, schedule, init, opts)
    return [(float(T.apply(spec, r.sigma)), r.ssim) for r in trace.records]
