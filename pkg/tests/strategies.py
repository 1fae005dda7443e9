"""Hypothesis strategies shared by the property tests."""

from fractions import Fraction

from hypothesis import strategies as st

from lgdefect.poly import Poly, RingSpec, pack
from lgdefect.scalar import FieldSpec

small_fracs = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def rationals_ring(names=("x", "y")):
    return RingSpec(tuple(names))


@st.composite
def polys(draw, ring: RingSpec, max_terms=5, max_exp=3):
    n = ring.n
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        e = tuple(draw(st.integers(0, max_exp)) for _ in range(n))
        c = draw(small_fracs)
        if c:
            terms[e] = ring.field.coerce(c)
    return Poly.from_dict(ring, terms)


@st.composite
def cyclo_elements(draw, n):
    F = FieldSpec.cyclotomic(n)
    z = F.zeta()
    coeffs = draw(st.lists(small_fracs, min_size=1, max_size=6))
    out = F.zero()
    for k, c in enumerate(coeffs):
        out = out + z ** k * F.coerce(c)
    return out


def to_sympy(f: Poly, symbols):
    import sympy
    out = sympy.Integer(0)
    for e, c in f.exponent_dict().items():
        q = Fraction(int(c.numerator), int(c.denominator))
        term = sympy.Rational(q.numerator, q.denominator)
        for s, k in zip(symbols, e):
            term *= s ** k
        out += term
    return sympy.expand(out)


def from_sympy(expr, ring: RingSpec, symbols):
    import sympy
    P = sympy.Poly(sympy.expand(expr), *symbols)
    terms = {}
    for mon, c in P.terms():
        c = sympy.Rational(c)
        terms[tuple(mon)] = ring.field.coerce(Fraction(int(c.p), int(c.q)))
    return Poly.from_dict(ring, terms)
