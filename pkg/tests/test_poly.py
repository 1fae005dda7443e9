from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from lgdefect.poly import (DivisionRemainderError, RingSpec, divided_difference, doubled_ring, embed,
                           exact_divide, format_poly, homogeneity, parse_poly, partial_derivative,
                           rename, substitute)
from lgdefect.scalar import FieldSpec
from lgdefect.textparse import ParseError

from strategies import from_sympy, polys, to_sympy

R = RingSpec(("x", "y"))
X, Y = sympy.symbols("x y")


@given(f=polys(R), g=polys(R))
def test_arithmetic_matches_sympy(f, g):
    F, G = to_sympy(f, (X, Y)), to_sympy(g, (X, Y))
    assert (f * g) == from_sympy(F * G, R, (X, Y))
    assert (f + g) == from_sympy(F + G, R, (X, Y))
    assert (f - g) == from_sympy(F - G, R, (X, Y))


@given(f=polys(R))
def test_derivative_matches_sympy(f):
    F = to_sympy(f, (X, Y))
    assert partial_derivative(f, "x") == from_sympy(sympy.diff(F, X), R, (X, Y))
    assert partial_derivative(f, 1) == from_sympy(sympy.diff(F, Y), R, (X, Y))


@given(f=polys(R), g=polys(R, max_terms=3))
def test_exact_divide_inverts_multiplication(f, g):
    if not g:
        return
    assert exact_divide(f * g, g) == f


def test_exact_divide_reports_remainder():
    x, y = R.gens()
    with pytest.raises(DivisionRemainderError):
        exact_divide(x ** 2 + y, x)


@given(f=polys(R))
def test_format_parse_round_trip(f):
    assert parse_poly(format_poly(f), R) == f


def test_cyclotomic_coefficients_round_trip():
    S = RingSpec(("x",), None, FieldSpec.cyclotomic(5))
    z = S.field.zeta()
    f = S.gen("x").scale(z * 2 + 1) - S.one().scale(z ** 3)
    text = format_poly(f)
    assert parse_poly(text, S) == f


def test_parse_error_location():
    with pytest.raises(ParseError) as err:
        parse_poly("x^2 + * y", R)
    assert err.value.line == 1 and err.value.column == 7


@given(f=polys(R), g=polys(R, max_terms=3), h=polys(R, max_terms=3))
def test_substitution_matches_sympy(f, g, h):
    F = to_sympy(f, (X, Y))
    expected = sympy.expand(F.subs({X: to_sympy(g, (X, Y)), Y: to_sympy(h, (X, Y))}, simultaneous=True))
    assert substitute(f, {"x": g, "y": h}) == from_sympy(expected, R, (X, Y))


@given(W=polys(R, max_terms=4, max_exp=4))
def test_divided_differences_telescope(W):
    # sum_i (x_i - x'_i) dd_i W = W(x) - W(x')
    E = doubled_ring(R)
    total = E.zero()
    for i, v in enumerate(R.variables):
        total = total + (E.gen(v) - E.gen(v + "'")) * divided_difference(W, i, target=E)
    expected = embed(W, E) - rename(W, {"x": "x'", "y": "y'"}, E)
    assert total == expected


def test_homogeneity_with_weights():
    G = RingSpec(("x", "y"), (Fraction(2, 3), Fraction(1, 2)))
    x, y = G.gens()
    assert homogeneity(x ** 3 + y ** 4) == 2
    assert homogeneity(x ** 3 + y) is None


def test_ring_validation():
    with pytest.raises(ValueError):
        RingSpec(("x", "x"))
    with pytest.raises(ValueError):
        RingSpec(("x",), (0,))
