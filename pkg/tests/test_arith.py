from fractions import Fraction
import math

import pytest
from hypothesis import given, strategies as st

from filtra.arith import Q5, as_exact, format_weight, parse_weight

fracs = st.fractions(min_value=-20, max_value=20, max_denominator=50)
q5s = st.builds(Q5, fracs, fracs)


def test_golden_root_solves_quadratic():
    g = Q5.golden()
    assert g * g + g == 1
    assert abs(float(g) - (math.sqrt(5) - 1) / 2) < 1e-15


@given(q5s, q5s)
def test_field_operations_match_floats(a, b):
    assert abs(float(a + b) - (float(a) + float(b))) < 1e-9
    assert abs(float(a * b) - float(a) * float(b)) < 1e-6
    if b:
        assert (a / b) * b == a


@given(q5s, q5s)
def test_ordering_is_exact_and_consistent(a, b):
    fa, fb = float(a), float(b)
    if abs(fa - fb) > 1e-9:
        assert (a < b) == (fa < fb)
    assert (a == b) == (a.a == b.a and a.b == b.b)


@given(q5s)
def test_text_round_trip(x):
    assert parse_weight(format_weight(x)) == x


@given(fracs)
def test_rational_round_trip(x):
    assert parse_weight(format_weight(x)) == x


def test_parse_forms():
    assert parse_weight("3/4") == Fraction(3, 4)
    assert parse_weight("-1/2+1/2*sqrt5") == Q5.golden()
    assert parse_weight("2*sqrt5") == Q5(0, 2)
    assert parse_weight("1-3*sqrt5") == Q5(1, -3)
    assert parse_weight("1/3", exact=False) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        parse_weight("1+sqrt5")


def test_q5_mixes_with_rationals():
    g = Q5.golden()
    assert g + Fraction(1, 2) == Q5(0, Fraction(1, 2))
    assert 1 - g == Q5(Fraction(3, 2), Fraction(-1, 2))
    assert g**-1 == g + 1
    assert hash(Q5(Fraction(1, 3))) == hash(Fraction(1, 3))


def test_as_exact_coerces_floats():
    assert as_exact(0.25) == Fraction(1, 4)
    assert as_exact("2/7") == Fraction(2, 7)
