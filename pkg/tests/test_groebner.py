import itertools

import pytest
import sympy
from hypothesis import given, strategies as st

from lgdefect.groebner import (NonIsolatedError, buchberger, lift_monomial_powers, normal_form,
                               quotient_basis, reduce_mod, solve_linear_over_ring, syzygies)
from lgdefect.linalg import Echelon
from lgdefect.poly import RingSpec, pack, partial_derivative
from lgdefect.scalar import FieldSpec

from strategies import from_sympy, polys, to_sympy

R = RingSpec(("x", "y"))
x, y = R.gens()
SX, SY = sympy.symbols("x y")

POTENTIALS = ["x^3 + y^3", "x^3 + y^4", "x^3 + x*y^3", "x^3 + y^5", "x^4 - y^2", "x^2*y + y^4",
              "x^2*y + y^5"]


def jacobian(text):
    W = R.parse(text)
    return [partial_derivative(W, v) for v in R.variables]


def monic(f):
    c = f.leading_term()[1]
    return f.scale(1 / c)


@pytest.mark.parametrize("text", POTENTIALS)
def test_reduced_basis_matches_sympy(text):
    gens = jacobian(text)
    I = buchberger(gens, use_cache=False)
    G = sympy.groebner([to_sympy(g, (SX, SY)) for g in gens], SX, SY, order="grevlex")
    ours = sorted(str(monic(g)) for g in I.groebner)
    theirs = sorted(str(monic(from_sympy(g, R, (SX, SY)))) for g in G.exprs)
    assert ours == theirs


@pytest.mark.parametrize("text", POTENTIALS)
@given(f=polys(R, max_terms=4, max_exp=5))
def test_normal_form_certificate(text, f):
    gens = jacobian(text)
    I = buchberger(gens)
    res = normal_form(f, I)
    recomposed = res.remainder
    for c, g in zip(res.cofactors, I.generators):
        recomposed = recomposed + c * g
    assert recomposed == f
    assert reduce_mod(res.remainder, I) == res.remainder


def _brute_colength(gens, N):
    """dim k[x]/(I + m^N), from the span of monomial multiples truncated at degree N."""
    n = R.n
    monos = [e for e in itertools.product(range(N), repeat=n) if sum(e) < N]
    index = {pack(e): k for k, e in enumerate(monos)}
    ech = Echelon()
    for g in gens:
        for e in monos:
            prod = g * R.monomial(e)
            vec = {index[m]: c for m, c in prod.terms.items() if m in index}
            if vec:
                ech.add(vec)
    return len(monos) - ech.rank


@pytest.mark.parametrize("text", POTENTIALS)
def test_colength_matches_linear_algebra(text):
    gens = jacobian(text)
    I = buchberger(gens)
    Ns, C = lift_monomial_powers(I)
    assert len(quotient_basis(I)) == _brute_colength(gens, sum(Ns))


@pytest.mark.parametrize("text, mu", [("x^3 + y^4", 6), ("x^3 + x*y^3", 7), ("x^3 + y^5", 8),
                                      ("x^4 - y^2", 3)])
def test_milnor_numbers(text, mu):
    assert len(quotient_basis(buchberger(jacobian(text)))) == mu


@pytest.mark.parametrize("text", POTENTIALS)
def test_lift_identity(text):
    I = buchberger(jacobian(text))
    Ns, C = lift_monomial_powers(I)
    for i, (N, row) in enumerate(zip(Ns, C)):
        total = R.zero()
        for c, g in zip(row, I.generators):
            total = total + c * g
        assert total == R.gen(i) ** N


def test_non_isolated_is_reported():
    I = buchberger([x * y, x * y ** 2])
    with pytest.raises(NonIsolatedError):
        quotient_basis(I)


def test_critical_points_away_from_origin_are_detected():
    # quotient is finite, but x is not nilpotent: other critical points exist
    I = buchberger(jacobian("x^5 + y^3 + x^2*y^2"))
    with pytest.raises(NonIsolatedError):
        lift_monomial_powers(I)


def test_cyclotomic_coefficients():
    S = RingSpec(("x", "y"), None, FieldSpec.cyclotomic(3))
    z = S.field.zeta()
    a, b = S.gens()
    I = buchberger([a ** 2 - b.scale(z), b ** 2])
    assert len(quotient_basis(I)) == 4


@given(data=st.data())
def test_solve_linear_over_ring(data):
    A = [[data.draw(polys(R, max_terms=2, max_exp=2)) for _ in range(2)] for _ in range(2)]
    u = [data.draw(polys(R, max_terms=2, max_exp=2)) for _ in range(2)]
    b = [A[i][0] * u[0] + A[i][1] * u[1] for i in range(2)]
    sol = solve_linear_over_ring(A, b)
    assert sol is not None
    for i in range(2):
        assert A[i][0] * sol[0] + A[i][1] * sol[1] == b[i]


def test_unsolvable_system():
    assert solve_linear_over_ring([[x, y]], [R.one()]) is None


def test_syzygies_are_relations():
    cols = [[x], [y], [x * y]]
    for s in syzygies(cols, R):
        assert sum((c[0] * k for c, k in zip(cols, s)), R.zero()) == R.zero()
    assert len(syzygies(cols, R)) >= 2
