"""Noise schedules, forward corruption and training-time sigma sampling."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import transforms as T
from .errors import DomainError, ScheduleError
from .imaging import DiffusionTensor
from .transforms import TransformSpec

SIGMA_MIN = 0.002
SIGMA_MAX = 80.0
RHO = 7.0
SIGMA_DATA = 0.5
COSINE_S = 0.008


class Order(str, enum.Enum):
    ASCENDING = "ascending"
    DESCENDING = "descending"


@dataclass(frozen=True)
class PhiSpace:
    spec: TransformSpec


@dataclass(frozen=True)
class EdmRho:
    rho: float


@dataclass(frozen=True)
class DdpmCosine:
    t_steps: int


Source = Union[PhiSpace, EdmRho, DdpmCosine]


@dataclass(frozen=True, eq=False)
class SigmaSchedule:
    sigmas: np.ndarray
    sigma_min: float
    sigma_max: float
    order: Order
    source: Source

    def __post_init__(self):
        s = np.array(self.sigmas, dtype=np.float64)
        if s.ndim != 1 or s.size < 2:
            raise ScheduleError("a schedule needs at least two levels")
        floor_ok = (s >= 0) if isinstance(self.source, DdpmCosine) else (s > 0)
        if not np.all(np.isfinite(s)) or not np.all(floor_ok):
            raise ScheduleError("schedule levels must be finite and positive")
        d = np.diff(s)
        if self.order is Order.ASCENDING and not np.all(d > 0):
            raise ScheduleError("ascending schedule is not strictly increasing")
        if self.order is Order.DESCENDING and not np.all(d < 0):
            raise ScheduleError("descending schedule is not strictly decreasing")
        s.setflags(write=False)
        object.__setattr__(self, "sigmas", s)
        object.__setattr__(self, "order", Order(self.order))

    def __len__(self):
        return self.sigmas.size

    def __iter__(self):
        return iter(self.sigmas.tolist())

    def descending(self) -> "SigmaSchedule":
        if self.order is Order.DESCENDING:
            return self
        return SigmaSchedule(self.sigmas[::-1], self.sigma_min, self.sigma_max, Order.DESCENDING, self.source)

    def ascending(self) -> "SigmaSchedule":
        if self.order is Order.ASCENDING:
            return self
        return SigmaSchedule(self.sigmas[::-1], self.sigma_min, self.sigma_max, Order.ASCENDING, self.source)


def _check_endpoints(sigma_min: float, sigma_max: float, n: int):
    if not (math.isfinite(sigma_min) and math.isfinite(sigma_max)) or not 0 < sigma_min < sigma_max:
        raise DomainError(f"need 0 < sigma_min < sigma_max, got [{sigma_min}, {sigma_max}]")
    if n < 2:
        raise DomainError(f"a schedule needs n >= 2 levels, got {n}")


def phi_schedule(
    spec: TransformSpec,
    sigma_min: float = SIGMA_MIN,
    sigma_max: float = SIGMA_MAX,
    n: int = 50,
    order: Order = Order.ASCENDING,
) -> SigmaSchedule:
    """Levels equally spaced in ``spec``-space between the two endpoints."""
    _check_endpoints(sigma_min, sigma_max, n)
    lo = T.apply(spec, sigma_min)
    hi = T.apply(spec, sigma_max)
    frac = np.arange(n, dtype=np.float64) / (n - 1)
    targets = lo + frac * (hi - lo)
    sig = np.empty(n)
    sig[1:-1] = T.invert(spec, targets[1:-1])
    sig[0], sig[-1] = sigma_min, sigma_max
    sched = SigmaSchedule(sig, sigma_min, sigma_max, Order.ASCENDING, PhiSpace(spec))
    return sched if Order(order) is Order.ASCENDING else sched.descending()


def edm_rho_schedule(
    rho: float = RHO,
    sigma_min: float = SIGMA_MIN,
    sigma_max: float = SIGMA_MAX,
    n: int = 50,
) -> SigmaSchedule:
    """Karras-style schedule, descending from ``sigma_max`` to ``sigma_min``."""
    _check_endpoints(sigma_min, sigma_max, n)
    if not rho >= 1:
        raise DomainError(f"rho must be >= 1, got {rho}")
    a = sigma_max ** (1.0 / rho)
    b = sigma_min ** (1.0 / rho)
    frac = np.arange(n, dtype=np.float64) / (n - 1)
    sig = (a + frac * (b - a)) ** rho
    sig[0], sig[-1] = sigma_max, sigma_min
    return SigmaSchedule(sig, sigma_min, sigma_max, Order.DESCENDING, EdmRho(float(rho)))


def ddpm_cosine_alpha_bar(t_steps: int, s: float = COSINE_S) -> np.ndarray:
    """Cumulative signal fraction at ``t = 0 .. t_steps-1`` of a ``t_steps``-step cosine process."""
    if t_steps < 2:
        raise DomainError(f"t_steps must be >= 2, got {t_steps}")
    t = np.arange(t_steps, dtype=np.float64) / t_steps
    f = np.cos((t + s) / (1.0 + s) * np.pi / 2.0) ** 2
    f0 = math.cos(s / (1.0 + s) * math.pi / 2.0) ** 2
    return f / f0


def ddpm_cosine_equivalent_sigmas(t_steps: int) -> SigmaSchedule:
    """Noise-to-signal ratios ``sqrt((1 - abar) / abar)`` of the cosine process, ascending in t."""
    abar = ddpm_cosine_alpha_bar(t_steps)
    sig = np.sqrt(np.maximum(1.0 - abar, 0.0) / abar)
    sig[0] = 0.0
    return SigmaSchedule(sig, 0.0, float(sig[-1]), Order.ASCENDING, DdpmCosine(int(t_steps)))


def corrupt(x0, sigma: float, rng: np.random.Generator):
    """``x0 + sigma * eps`` with ``eps ~ N(0, I)``; accepts a DiffusionTensor or an array."""
    if not sigma >= 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return x0
    data = x0.data if isinstance(x0, DiffusionTensor) else np.asarray(x0, dtype=np.float64)
    out = data + sigma * rng.standard_normal(data.shape)
    return DiffusionTensor(out) if isinstance(x0, DiffusionTensor) else out


def corrupt_ddpm(x0, alpha_bar: float, rng: np.random.Generator):
    """Variance-preserving corruption ``sqrt(abar) * x0 + sqrt(1 - abar) * eps``."""
    if not 0 < alpha_bar <= 1:
        raise DomainError(f"alpha_bar must lie in (0, 1], got {alpha_bar}")
    data = x0.data if isinstance(x0, DiffusionTensor) else np.asarray(x0, dtype=np.float64)
    if alpha_bar == 1.0:
        return x0
    out = math.sqrt(alpha_bar) * data + math.sqrt(1.0 - alpha_bar) * rng.standard_normal(data.shape)
    return DiffusionTensor(out) if isinstance(x0, DiffusionTensor) else out


def sample_sigma_uniform_phi(
    spec: TransformSpec,
    sigma_min: float,
    sigma_max: float,
    rng: np.random.Generator,
    size=None,
):
    """Draw sigma so that ``spec(sigma)`` is uniform between the endpoint images."""
    _check_endpoints(sigma_min, sigma_max, 2)
    lo = T.apply(spec, sigma_min)
    hi = T.apply(spec, sigma_max)
    u = rng.random(size)
    v = lo + u * (hi - lo)
    if np.ndim(v) == 0:
        if v == lo:
            return float(sigma_min)
        return float(np.clip(T.invert(spec, v), sigma_min, sigma_max))
    v = np.asarray(v)
    out = np.full(v.shape, sigma_min, dtype=np.float64)
    inner = v != lo
    if inner.any():
        out[inner] = T.invert(spec, v[inner])
    return np.clip(out, sigma_min, sigma_max)


def schedule_rows(schedule: SigmaSchedule, spec: TransformSpec):
    """``(i, sigma, phi)`` rows; phi is NaN where sigma is zero."""
    rows = []
    for i, s in enumerate(schedule.sigmas.tolist()):
        rows.append((i, s, T.apply(spec, s) if s > 0 else math.nan))
    return rows
