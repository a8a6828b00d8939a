"""Monotone sigma-space transforms and their inverses.

A :class:`TransformSpec` names one member of the candidate family (plus its
constant, for the two parameterised squash kinds). ``apply`` maps noise
levels to the transformed axis, ``invert`` maps back, using closed forms.
``invert_bisect`` is a generic bracketed fallback kept mainly as an
independent cross-check.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError

BISECT_LO = 1e-12
BISECT_HI = 1e6
SATURATION_EPS = 1e-12


class Kind(str, enum.Enum):
    IDENTITY = "identity"
    LOG = "log"
    LOG1P = "log1p"
    SQUARE = "square"
    RECIP = "recip"
    RECIPSQ = "recipsq"
    ARCSINH = "arcsinh"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    SQUASH = "squash"
    POWSQUASH = "powsquash"
    LOGSQ1 = "logsq1"
    ARCTAN = "arctan"


_DECREASING = {Kind.RECIP, Kind.RECIPSQ}
# kinds whose forward map hits 1.0 in double precision well inside (0, 80]
_SATURATING = {Kind.TANH, Kind.SIGMOID}

_LABELS = {
    Kind.IDENTITY: "σ",
    Kind.LOG: "log(σ)",
    Kind.LOG1P: "log1p(σ)",
    Kind.SQUARE: "σ²",
    Kind.RECIP: "1/σ",
    Kind.RECIPSQ: "1/σ²",
    Kind.ARCSINH: "arcsinh(σ)",
    Kind.TANH: "tanh(σ)",
    Kind.SIGMOID: "sigmoid(σ)",
    Kind.LOGSQ1: "log(σ²+1)",
    Kind.ARCTAN: "arctan(σ)",
}


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(float(x))


@dataclass(frozen=True)
class TransformSpec:
    kind: Kind
    c: float | None = None
    p: float | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Kind.SQUASH:
            if self.c is None or not self.c > 0 or not math.isfinite(self.c):
                raise DomainError(f"squash needs a positive constant c, got {self.c}")
            object.__setattr__(self, "c", float(self.c))
        elif self.c is not None:
            raise DomainError(f"{kind.value} takes no c parameter")
        if kind is Kind.POWSQUASH:
            if self.p is None or not self.p > 0 or not math.isfinite(self.p):
                raise DomainError(f"powsquash needs a positive power p, got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise DomainError(f"{kind.value} takes no p parameter")

    @property
    def increasing(self) -> bool:
        return self.kind not in _DECREASING

    @property
    def label(self) -> str:
        if self.kind is Kind.SQUASH:
            return f"σ/(σ+{_fmt_num(self.c)})"
        if self.kind is Kind.POWSQUASH:
            return f"σ^{_fmt_num(self.p)}/(σ^{_fmt_num(self.p)}+1)"
        return _LABELS[self.kind]

    def __str__(self) -> str:
        if self.kind is Kind.SQUASH:
            return f"squash:{_fmt_num(self.c)}"
        if self.kind is Kind.POWSQUASH:
            return f"powsquash:{_fmt_num(self.p)}"
        return self.kind.value

    def image_bounds(self) -> tuple[float, float]:
        """Open interval covered by ``apply`` over ``(0, inf)``."""
        return _IMAGE[self.kind]

    def apply(self, sigma):
        return apply(self, sigma)

    def invert(self, value):
        return invert(self, value)


_IMAGE = {
    Kind.IDENTITY: (0.0, math.inf),
    Kind.LOG: (-math.inf, math.inf),
    Kind.LOG1P: (0.0, math.inf),
    Kind.SQUARE: (0.0, math.inf),
    Kind.RECIP: (0.0, math.inf),
    Kind.RECIPSQ: (0.0, math.inf),
    Kind.ARCSINH: (0.0, math.inf),
    Kind.TANH: (0.0, 1.0),
    Kind.SIGMOID: (0.5, 1.0),
    Kind.SQUASH: (0.0, 1.0),
    Kind.POWSQUASH: (0.0, 1.0),
    Kind.LOGSQ1: (0.0, math.inf),
    Kind.ARCTAN: (0.0, math.pi / 2),
}


def parse_spec(text: str) -> TransformSpec:
    """Parse ``identity``, ``log``, ``squash:0.3``, ``powsquash:2`` and friends."""
    name, _, arg = text.strip().partition(":")
    try:
        kind = Kind(name.lower())
    except ValueError:
        raise DomainError(f"unknown transform {text!r}") from None
    if kind in (Kind.SQUASH, Kind.POWSQUASH):
        if not arg:
            raise DomainError(f"{kind.value} needs a parameter, e.g. {kind.value}:0.3")
        try:
            val = float(arg)
        except ValueError:
            raise DomainError(f"bad parameter in {text!r}") from None
        return TransformSpec(kind, c=val) if kind is Kind.SQUASH else TransformSpec(kind, p=val)
    if arg:
        raise DomainError(f"{kind.value} takes no parameter")
    return TransformSpec(kind)


def _forward(spec: TransformSpec, s: np.ndarray) -> np.ndarray:
    k = spec.kind
    if k is Kind.IDENTITY:
        return s.copy()
    if k is Kind.LOG:
        return np.log(s)
    if k is Kind.LOG1P:
        return np.log1p(s)
    if k is Kind.SQUARE:
        return s * s
    if k is Kind.RECIP:
        return 1.0 / s
    if k is Kind.RECIPSQ:
        return 1.0 / (s * s)
    if k is Kind.ARCSINH:
        return np.arcsinh(s)
    if k is Kind.TANH:
        return np.tanh(s)
    if k is Kind.SIGMOID:
        return 1.0 / (1.0 + np.exp(-s))
    if k is Kind.SQUASH:
        return s / (s + spec.c)
    if k is Kind.POWSQUASH:
        sp = s ** spec.p
        return sp / (sp + 1.0)
    if k is Kind.LOGSQ1:
        return np.log1p(s * s)
    if k is Kind.ARCTAN:
        return np.arctan(s)
    raise AssertionError(k)


def _backward(spec: TransformSpec, v: np.ndarray) -> np.ndarray:
    k = spec.kind
    if k is Kind.IDENTITY:
        return v.copy()
    if k is Kind.LOG:
        return np.exp(v)
    if k is Kind.LOG1P:
        return np.expm1(v)
    if k is Kind.SQUARE:
        return np.sqrt(v)
    if k is Kind.RECIP:
        return 1.0 / v
    if k is Kind.RECIPSQ:
        return 1.0 / np.sqrt(v)
    if k is Kind.ARCSINH:
        return np.sinh(v)
    if k is Kind.TANH:
        return np.arctanh(v)
    if k is Kind.SIGMOID:
        return np.log(v / (1.0 - v))
    if k is Kind.SQUASH:
        return spec.c * v / (1.0 - v)
    if k is Kind.POWSQUASH:
        return (v / (1.0 - v)) ** (1.0 / spec.p)
    if k is Kind.LOGSQ1:
        return np.sqrt(np.expm1(v))
    if k is Kind.ARCTAN:
        return np.tan(v)
    raise AssertionError(k)


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def apply(spec: TransformSpec, sigma):
    """Evaluate the transform at ``sigma`` (scalar or array, all > 0)."""
    s = np.asarray(sigma, dtype=np.float64)
    if not np.all(s > 0):
        raise DomainError("sigma must be strictly positive")
    return _scalar_or_array(_forward(spec, s), sigma)


def _prepare_value(spec: TransformSpec, value) -> np.ndarray:
    v = np.array(value, dtype=np.float64)
    lo, hi = spec.image_bounds()
    if spec.kind in _SATURATING:
        # values that rounded onto the asymptote are pulled back inside
        v = np.where((v >= hi - SATURATION_EPS) & (v <= hi), hi - SATURATION_EPS, v)
    if not np.all(np.isfinite(v)) or not np.all((v > lo) & (v < hi)):
        raise RangeError(f"value outside the image ({lo}, {hi}) of {spec}")
    return v


def invert(spec: TransformSpec, value):
    """Closed-form inverse; raises :class:`RangeError` outside the transform's image."""
    v = _prepare_value(spec, value)
    return _scalar_or_array(_backward(spec, v), value)


def invert_bisect(spec: TransformSpec, value, lo: float = BISECT_LO, hi: float = BISECT_HI, rtol: float = 1e-12):
    """Inverse by bisection in log-sigma on ``[lo, hi]``; slow, used as a cross-check."""
    v = _prepare_value(spec, value)
    flat = v.reshape(-1)
    out = np.empty_like(flat)
    sign = 1.0 if spec.increasing else -1.0
    f_lo = sign * float(_forward(spec, np.array(lo)))
    f_hi = sign * float(_forward(spec, np.array(hi)))
    for idx, target in enumerate(flat):
        t = sign * target
        if not f_lo <= t <= f_hi:
            raise RangeError(f"value {target} not bracketed by [{lo}, {hi}] for {spec}")
        a, b = math.log(lo), math.log(hi)
        while b - a > rtol:
            mid = 0.5 * (a + b)
            if sign * float(_forward(spec, np.array(math.exp(mid)))) < t:
                a = mid
            else:
                b = mid
        out[idx] = math.exp(0.5 * (a + b))
    return _scalar_or_array(out.reshape(v.shape), value)


def candidate_set() -> list[TransformSpec]:
    """The sixteen searched transforms, weakest expected linearity first."""
    K = Kind
    return [
        TransformSpec(K.SQUARE),
        TransformSpec(K.RECIPSQ),
        TransformSpec(K.IDENTITY),
        TransformSpec(K.RECIP),
        TransformSpec(K.LOGSQ1),
        TransformSpec(K.LOG1P),
        TransformSpec(K.ARCSINH),
        TransformSpec(K.POWSQUASH, p=2.0),
        TransformSpec(K.SIGMOID),
        TransformSpec(K.SQUASH, c=0.9),
        TransformSpec(K.TANH),
        TransformSpec(K.SQUASH, c=0.7),
        TransformSpec(K.LOG),
        TransformSpec(K.SQUASH, c=0.1),
        TransformSpec(K.SQUASH, c=0.5),
        TransformSpec(K.SQUASH, c=0.3),
    ]


PHI_STAR = TransformSpec(Kind.SQUASH, c=0.3)
