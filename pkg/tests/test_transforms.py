import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sigmaspace.errors import DomainError, RangeError
from sigmaspace.transforms import (
    PHI_STAR,
    Kind,
    TransformSpec,
    apply,
    candidate_set,
    invert,
    invert_bisect,
    parse_spec,
)

SIGMAS = np.logspace(-3, 2, 100)
CANDIDATES = candidate_set()


def test_examples():
    assert apply(TransformSpec(Kind.SQUASH, c=0.3), 0.3) == 0.5
    assert apply(TransformSpec(Kind.LOG), 1.0) == 0.0
    assert apply(TransformSpec(Kind.POWSQUASH, p=2), 1.0) == 0.5
    assert invert(TransformSpec(Kind.SQUASH, c=0.3), 0.5) == pytest.approx(0.3, rel=1e-15)


def test_candidate_set_order():
    names = [str(s) for s in CANDIDATES]
    assert names == [
        "square", "recipsq", "identity", "recip", "logsq1", "log1p", "arcsinh", "powsquash:2",
        "sigmoid", "squash:0.9", "tanh", "squash:0.7", "log", "squash:0.1", "squash:0.5", "squash:0.3",
    ]
    assert len(set(names)) == 16
    assert CANDIDATES[-1] == PHI_STAR


@pytest.mark.parametrize("spec", CANDIDATES, ids=str)
def test_round_trip_phi_space(spec):
    phi = apply(spec, SIGMAS)
    back = apply(spec, invert(spec, phi))
    assert np.max(np.abs(back - phi) / np.abs(phi)) < 1e-9


@pytest.mark.parametrize("spec", [s for s in CANDIDATES if s.kind not in (Kind.TANH, Kind.SIGMOID)], ids=str)
def test_round_trip_sigma_space(spec):
    back = invert(spec, apply(spec, SIGMAS))
    assert np.max(np.abs(back - SIGMAS) / SIGMAS) < 1e-9


@pytest.mark.parametrize("spec", [TransformSpec(Kind.TANH), TransformSpec(Kind.SIGMOID)], ids=str)
def test_saturating_kinds_round_trip_below_saturation(spec):
    s = SIGMAS[SIGMAS < 5]
    back = invert(spec, apply(spec, s))
    assert np.max(np.abs(back - s) / s) < 1e-9


@pytest.mark.parametrize("spec", CANDIDATES, ids=str)
def test_bisection_agrees_with_closed_form(spec):
    s = np.logspace(-2, 0.5, 7)
    v = apply(spec, s)
    np.testing.assert_allclose(invert_bisect(spec, v), invert(spec, v), rtol=1e-9)


@pytest.mark.parametrize("spec", CANDIDATES, ids=str)
def test_strict_monotonicity(spec):
    s = np.logspace(-3, 0.5, 400)  # below the tanh / sigmoid saturation point
    d = np.diff(apply(spec, s))
    assert np.all(d > 0) if spec.increasing else np.all(d < 0)
    full = np.diff(apply(spec, np.logspace(-3, 2, 400)))
    assert np.all(full >= 0) if spec.increasing else np.all(full <= 0)


def test_domain_and_range_errors():
    sq = TransformSpec(Kind.SQUASH, c=0.3)
    with pytest.raises(DomainError):
        apply(sq, 0.0)
    with pytest.raises(DomainError):
        apply(sq, np.array([1.0, -1.0]))
    for bad in (1.0, 0.0, -0.1, 1.5, math.nan):
        with pytest.raises(RangeError):
            invert(sq, bad)
    with pytest.raises(RangeError):
        invert(TransformSpec(Kind.SIGMOID), 0.4)
    with pytest.raises(RangeError):
        invert(TransformSpec(Kind.TANH), 1.0 + 1e-9)


def test_saturated_values_are_clamped():
    tanh = TransformSpec(Kind.TANH)
    assert apply(tanh, 40.0) == 1.0
    s = invert(tanh, 1.0)
    assert math.isfinite(s) and s > 10


@pytest.mark.parametrize("kwargs", [
    dict(kind=Kind.SQUASH), dict(kind=Kind.SQUASH, c=0.0), dict(kind=Kind.SQUASH, c=-1.0),
    dict(kind=Kind.POWSQUASH, p=0.0), dict(kind=Kind.LOG, c=1.0), dict(kind=Kind.IDENTITY, p=2.0),
])
def test_spec_validation(kwargs):
    with pytest.raises(DomainError):
        TransformSpec(**kwargs)


@pytest.mark.parametrize("spec", CANDIDATES, ids=str)
def test_text_round_trip(spec):
    assert parse_spec(str(spec)) == spec
    assert str(parse_spec(str(spec))) == str(spec)


@pytest.mark.parametrize("text", ["nope", "squash", "squash:x", "log:1", "squash:-1"])
def test_parse_errors(text):
    with pytest.raises(DomainError):
        parse_spec(text)


@given(st.floats(1e-6, 1e3), st.floats(1e-3, 10))
def test_squash_property(sigma, c):
    spec = TransformSpec(Kind.SQUASH, c=c)
    v = apply(spec, sigma)
    assert 0 < v < 1
    assert invert(spec, v) == pytest.approx(sigma, rel=1e-9)
    assert parse_spec(str(spec)) == spec
