"""Named factorisations used by the worked examples and the report."""

from __future__ import annotations

from fractions import Fraction

from .mf import MF, GroupAction, Morphism
from .mf import external_product, identity_defect, koszul, shift, twist
from .poly import Poly, RingSpec, exact_divide
from .scalar import FieldSpec


def knorrer_K() -> MF:
    """K over k[u, v]: d = ((0, u - v), (u + v, 0)), a factorisation of u^2 - v^2."""
    R = RingSpec(("u", "v"), (Fraction(1), Fraction(1)))
    u, v = R.gens()
    K = koszul([(u - v, u + v)], ring=R)
    return K.copy_with(target_vars=("u", "v"), source_vars=())


def knorrer_defect(W: Poly) -> MF:
    """I_W (x)_k K in LG(W, W + u^2 - v^2)."""
    I = identity_defect(W)
    K = knorrer_K()
    K = K.with_ring(RingSpec(K.ring.variables, None, W.ring.field)) if not W.ring.graded else K
    X = external_product(I, K)
    return X.copy_with(target_vars=I.target_vars + ("u", "v"), source_vars=I.source_vars)


def ad_ring(d: int, field: FieldSpec | None = None) -> RingSpec:
    """k[x, y, u, v] graded so that x^d - x y^2 and u^{2d} - v^2 have weight 2."""
    d = Fraction(d)
    degs = (2 / d, (d - 1) / d, 1 / d, Fraction(1))
    return RingSpec(("x", "y", "u", "v"), degs, field or FieldSpec.rationals())


def ad_potentials(d: int) -> tuple[Poly, Poly]:
    """(W^D(x, y), W^A(u, v)) = (x^d - x y^2, u^{2d} - v^2) in their own rings."""
    R = ad_ring(d)
    D = RingSpec(("x", "y"), R.degrees[:2])
    A = RingSpec(("u", "v"), R.degrees[2:])
    x, y = D.gens()
    u, v = A.gens()
    return x ** d - x * y ** 2, u ** (2 * d) - v ** 2


def ad_defect(d: int) -> MF:
    """The rank-(2|2) defect between the A_{2d-1} and D_{d+1} potentials.

    Target (x, y), source (u, v); potential x^d - x y^2 - (u^{2d} - v^2).
    """
    R = ad_ring(d)
    x, y, u, v = R.gens()
    q = exact_divide(x ** d - u ** (2 * d), x - u ** 2)
    X = koszul([(x - u ** 2, q - y ** 2), (v - u * y, v + u * y)], ring=R)
    return X.copy_with(target_vars=("x", "y"), source_vars=("u", "v"))


def ad_supertrace_formula(d: int) -> Poly:
    """4 y^2 + sum_{i=0}^{d-2} 4 d u^{2i+2} x^{d-2-i}."""
    R = ad_ring(d)
    x, y, u, v = R.gens()
    out = y ** 2 * 4
    for i in range(d - 1):
        out = out + u ** (2 * i + 2) * x ** (d - 2 - i) * (4 * d)
    return out


def jd_candidate(d: int, target=("u", "v"), source=("u'", "v'")) -> MF:
    """Candidate for the invertible summand J_d of A_d.

    The rank-one factor (u + u') of u^{2d} - u'^{2d}, tensored with the
    Koszul pair (v - v', -(v + v')) and shifted once.
    """
    u, v = target
    u2, v2 = source
    d_ = Fraction(d)
    R = RingSpec((u, v, u2, v2), (1 / d_, Fraction(1), 1 / d_, Fraction(1)))
    a, b, a2, b2 = R.gens()
    q = exact_divide(a ** (2 * d) - a2 ** (2 * d), a + a2)
    J = koszul([(a + a2, q), (b - b2, -(b + b2))], ring=R)
    J = shift(J)
    return J.copy_with(target_vars=tuple(target), source_vars=tuple(source))


def a_identity(d: int, target=("u", "v"), source=("u'", "v'")) -> MF:
    _, WA = ad_potentials(d)
    return identity_defect(WA, target, source)


def cyclic_action(d: int, names=("x",)) -> GroupAction:
    """Z_d acting diagonally by the primitive root on every variable."""
    F = FieldSpec.cyclotomic(d)
    z = F.zeta()
    n = len(names)
    M = [[z if i == j else 0 for j in range(n)] for i in range(n)]
    return GroupAction.cyclic(tuple(names), M)


def power_potential(d: int, field: FieldSpec | None = None) -> Poly:
    R = RingSpec(("x",), (Fraction(2, d),), field or FieldSpec.cyclotomic(d))
    return R.gen("x") ** d


def equivariant_power(d: int, n: int):
    """X = ((0, x^n), (x^{d-n}, 0)) for x^d with its Z_d-equivariant structure.

    Under the twist convention of this package the generator's isomorphism
    is diag(1, eta^n).
    """
    from .orbifold import EquivariantStructure
    W = power_potential(d)
    R = W.ring
    x = R.gen("x")
    X = koszul([(x ** n, x ** (d - n))], ring=R)
    G = cyclic_action(d)
    gen = 1
    eta = R.field.zeta()
    phi = Morphism(twist(G.elements[gen], X), X, [[R.one(), R.zero()], [R.zero(), R.const(eta ** n)]])
    return EquivariantStructure.from_generator(X, G, gen, phi)
