from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from identkit.values import (
    MISSING,
    Value,
    canonical,
    dequantize,
    equality_tolerance,
    get_eps,
    memo_value,
    quantize,
)

EPS = Fraction(1, 10**9)


def test_float_noise_is_absorbed():
    assert Value(0.1 + 0.2) == Value(0.3)
    assert Value(0.1 + 0.2).key == Value(0.3).key


def test_exact_and_float_scalars_share_keys():
    assert Value(Fraction(3, 4)) == Value(0.75) == Value(Fraction(75, 100))
    assert Value(1) == Value(1.0)


def test_ties_round_to_even():
    assert quantize(Fraction(1, 2) * EPS) == 0
    assert quantize(Fraction(3, 2) * EPS) == 2
    assert quantize(-Fraction(5, 2) * EPS) == -2


def test_distinct_grid_points_differ():
    assert Value(0.25) != Value(0.25 + 2e-9)


def test_structured_payloads():
    assert Value((0.5, (1, 2))) == Value((Fraction(1, 2), (1.0, 2.0)))
    assert Value({"a": 0.1 + 0.2, "b": 1}) == Value({"b": 1, "a": 0.3})
    assert Value(MISSING) == Value(None)
    assert Value((MISSING, 1)).to_python() == (MISSING, 1.0)
    assert Value("label") != Value("other")
    assert Value(3).scalar() == 3
    with pytest.raises(TypeError):
        Value((1, 2)).scalar()


def test_values_order_deterministically():
    vals = [Value(x) for x in (0.5, -1, 0.25)]
    assert [v.to_python() for v in sorted(vals)] == [-1.0, 0.25, 0.5]


def test_rejects_nan_and_unknown_payloads():
    with pytest.raises(ValueError):
        quantize(float("nan"))
    with pytest.raises(TypeError):
        canonical(object())


def test_equality_tolerance_is_scoped():
    with equality_tolerance(Fraction(1, 100)):
        assert Value(0.501) == Value(0.5)
        assert get_eps() == Fraction(1, 100)
    assert Value(0.501) != Value(0.5)
    assert get_eps() == EPS


def test_memo_value_matches_plain_constructor():
    make = memo_value()
    for x in (0.1, 0.1, (0.2, 0.3), [1, 2], {"a": 1}):
        assert make(x) == Value(x)


@given(n=st.integers(-(10**12), 10**12), frac=st.floats(-0.49, 0.49))
def test_quantize_is_stable_within_half_a_step(n, frac):
    x = n * EPS
    assert quantize(x + Fraction(frac) * EPS) == quantize(x) == n
    assert quantize(float(x) + frac * 1e-9) == n or abs(float(x)) > 1e3


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_key_equality_iff_value_equality(x):
    y = float(dequantize(quantize(x)))
    assert (Value(x) == Value(y)) == (Value(x).key == Value(y).key)
    assert Value(x) == Value(y)
