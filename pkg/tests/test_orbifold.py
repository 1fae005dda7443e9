import pytest

from lgdefect.homalg import hom_dimensions
from lgdefect.mf import GroupAction, Morphism, koszul, twist
from lgdefect.models import a_identity, cyclic_action, equivariant_power, jd_candidate, power_potential
from lgdefect.orbifold import (
    EquivariantStructure,
    OrbifoldAlgebra,
    OrbifoldError,
    ad_structure,
    ag_is_symmetric,
    algebra_as_equivariant,
    algebra_as_module,
    bulk_gram,
    bulk_space,
    check_frobenius_axioms,
    equivariant_to_module,
    module_to_equivariant,
    orbifold_hom,
    round_trip_defects,
    summand_multiplicity,
)
from lgdefect.poly import RingSpec
from lgdefect.scalar import FieldSpec


def z2_line():
    return RingSpec(("x",)).parse("x^2"), GroupAction.cyclic(("x",), [[-1]])


def z3_line():
    return power_potential(3), cyclic_action(3)


def a3_sign():
    W = RingSpec(("x", "y")).parse("x^4 - y^2")
    return W, GroupAction.cyclic(("x", "y"), [[-1, 0], [0, -1]])


CASES = {"x^2/Z2": z2_line, "x^3/Z3": z3_line, "x^4-y^2/Z2": a3_sign}


@pytest.fixture(scope="module", params=sorted(CASES))
def algebra(request):
    W, G = CASES[request.param]()
    return request.param, OrbifoldAlgebra(W, G)


def test_frobenius_axioms_hold(algebra):
    _, A = algebra
    rep = check_frobenius_axioms(A)
    assert rep.passed, rep.failures()[:3]
    n = A.order
    summary = rep.summary()
    assert summary["associativity"] == (n ** 3, n ** 3)
    assert summary["separability"] == (n, n)


def test_corrupted_multiplication_is_caught():
    W, G = z3_line()
    A = OrbifoldAlgebra(W, G).corrupt(1, 2)
    rep = check_frobenius_axioms(A, axioms=("associativity", "separability"))
    assert not rep.passed
    assert any(1 in c.location or 2 in c.location for c in rep.failures())
    # an untouched algebra over the same data is fine
    assert check_frobenius_axioms(OrbifoldAlgebra(W, G), axioms=("associativity",)).passed


@pytest.mark.parametrize("case, symmetric", [("x^2/Z2", False), ("x^3/Z3", False), ("x^4-y^2/Z2", True)])
def test_symmetry_routes_agree(case, symmetric):
    W, G = CASES[case]()
    v = ag_is_symmetric(W, G)
    assert v.symmetric is symmetric
    assert [d == 1 for d in v.determinants] == [d == 1 for d in v.right_dims]
    assert v.right_dims == v.determinants


EXPECTED = {
    # (End(A) as a plain MF, End_A(A) via projector, bulk space)
    "x^2/Z2": ((2, 2), (1, 1), (1, 0)),
    "x^3/Z3": ((6, 6), (2, 2), (1, 0)),
    "x^4-y^2/Z2": ((8, 0), (4, 0), (3, 0)),
}


def test_algebra_as_module(algebra):
    name, A = algebra
    plain, module, _ = EXPECTED[name]
    C = A.carrier()
    assert hom_dimensions(C, C) == plain
    M = algebra_as_module(A)
    M.validate()
    assert orbifold_hom(M, M).dims == module
    E = algebra_as_equivariant(A)
    assert orbifold_hom(E, E, method="average").dims == module


def test_bulk_space(algebra):
    name, A = algebra
    bs = bulk_space(A)
    assert bs.dims == EXPECTED[name][2]
    gram = bulk_gram(A, bs)
    assert len(gram) == len(bs.basis)


def test_bulk_pairing_nondegenerate_when_symmetric():
    W, G = a3_sign()
    A = OrbifoldAlgebra(W, G)
    gram = bulk_gram(A)
    # three sectors: the invariants 1, x^2 and the twisted vacuum
    det = (gram[0][0] * (gram[1][1] * gram[2][2] - gram[1][2] * gram[2][1])
           - gram[0][1] * (gram[1][0] * gram[2][2] - gram[1][2] * gram[2][0])
           + gram[0][2] * (gram[1][0] * gram[2][1] - gram[1][1] * gram[2][0]))
    assert det != 0


# ---------------------------------------------------------------------------
# equivariant factorisations


@pytest.mark.parametrize("d", [3, 4, 5])
def test_round_trip(d):
    for n in range(1, d):
        E = equivariant_power(d, n)
        M = equivariant_to_module(E)
        assert M.axiom_defects() == []
        assert round_trip_defects(E) == []
        back = module_to_equivariant(M)
        assert all(a.matrix == b.matrix for a, b in zip(back.phis, E.phis))


@pytest.mark.parametrize("d, n", [(3, 1), (4, 1), (4, 2), (5, 2)])
def test_projector_matches_average(d, n):
    E = equivariant_power(d, n)
    M = equivariant_to_module(E)
    assert orbifold_hom(M, M).dims == (1, 0)
    assert orbifold_hom(E, E, method="average").dims == (1, 0)
    assert hom_dimensions(E.X, E.X)[0] >= 1


def test_hom_between_different_equivariant_objects():
    E1, E2 = equivariant_power(4, 1), equivariant_power(4, 3)
    M1, M2 = equivariant_to_module(E1), equivariant_to_module(E2)
    plain = hom_dimensions(E1.X, E2.X)
    eq = orbifold_hom(M1, M2).dims
    assert all(a <= b for a, b in zip(eq, plain))
    assert eq == orbifold_hom(E1, E2, method="average").dims


def _x3_data():
    W = power_potential(3)
    R = W.ring
    x = R.gen("x")
    X = koszul([(x, x ** 2)], ring=R)
    G = cyclic_action(3)
    return R, X, G


def test_wrong_order_is_rejected():
    R, X, G = _x3_data()
    eta = R.field.zeta()
    # -phi is still a chain map but (-phi)^3 = -1
    phi = Morphism(twist(G.elements[1], X), X, [[R.const(-1), R.zero()], [R.zero(), R.const(-eta)]])
    with pytest.raises(OrbifoldError, match="order"):
        EquivariantStructure.from_generator(X, G, 1, phi)


def test_non_chain_map_is_rejected():
    R, X, G = _x3_data()
    phi = Morphism(twist(G.elements[1], X), X, [[R.one(), R.zero()], [R.zero(), R.one()]])
    with pytest.raises(OrbifoldError):
        EquivariantStructure.from_generator(X, G, 1, phi)


def test_phi_e_must_be_identity():
    R, X, G = _x3_data()
    E = EquivariantStructure.from_generator(
        X, G, 1, Morphism(twist(G.elements[1], X), X,
                          [[R.one(), R.zero()], [R.zero(), R.const(R.field.zeta())]]))
    phis = list(E.phis)
    e = G.identity_index
    phis[e] = phis[e].scale(2)
    with pytest.raises(OrbifoldError, match="identity"):
        EquivariantStructure(X, G, phis)
    with pytest.raises(OrbifoldError, match="one isomorphism"):
        EquivariantStructure(X, G, E.phis[:2])


def test_group_must_act_on_target_variables():
    R = RingSpec(("y",), None, FieldSpec.cyclotomic(3))
    y = R.gen("y")
    X = koszul([(y, y ** 2)], ring=R)
    G = cyclic_action(3)
    with pytest.raises(OrbifoldError):
        EquivariantStructure(X, G, [X.identity()] * 3, check=False)


# ---------------------------------------------------------------------------
# the A_d algebra


def test_j_is_not_a_summand_of_the_unit():
    I = a_identity(2, ("u", "v"), ("s", "r"))
    J = jd_candidate(2, ("u", "v"), ("s", "r"))
    assert summand_multiplicity(I, I) == 1
    assert summand_multiplicity(J, I) == 0
    assert summand_multiplicity(J, J) == 1


@pytest.mark.slow
def test_ad_structure_d2():
    r = ad_structure(2, safety=2)
    assert r.algebra_ranks == (4, 4)
    assert r.unit_multiplicity == 1
    assert r.j_multiplicity == 1
    assert r.square_ranks == r.unit_ranks
    assert r.square_hom == r.unit_hom
    assert r.unit_in_square == 1
    assert r.hom_unit_algebra == (4, 0)
    assert r.qdims["I"] == 1 and r.qdims["J"] == 1 and r.qdims["A"] == 2


# ---------------------------------------------------------------------------
# tensor products over A_G


@pytest.mark.parametrize("d, n", [(3, 1), (4, 2), (5, 2)])
def test_tensor_over_algebra_gives_equivariant_homs(d, n):
    from lgdefect.mf import unit_mf
    from lgdefect.orbifold import dual_structure, tensor_over_algebra
    E = equivariant_power(d, n)
    D = dual_structure(E)
    T = tensor_over_algebra(D.X, E.X, D, E)
    plain = T.fused.mf
    # X^v (x) X computes End(X); dividing by A_G leaves End_A(X)
    assert hom_dimensions(plain, unit_mf(plain.ring)) == hom_dimensions(E.X, E.X)
    assert hom_dimensions(T.mf, unit_mf(T.mf.ring)) == orbifold_hom(equivariant_to_module(E),
                                                                     equivariant_to_module(E)).dims
    e = T.projector
    assert hom_dimensions(T.mf, T.mf)[0] >= 1
    assert (e @ e - e).is_chain_map()


def test_tensor_over_trivial_group_is_fusion():
    from lgdefect.fusion import fuse
    from lgdefect.orbifold import dual_structure, tensor_over_algebra
    R = RingSpec(("x",))
    x = R.gen("x")
    X = koszul([(x, x ** 2)], ring=R).copy_with(target_vars=("x",), source_vars=())
    G = GroupAction.trivial(("x",))
    E = EquivariantStructure(X, G, [X.identity()])
    D = dual_structure(E)
    T = tensor_over_algebra(D.X, X, D, E)
    assert T.mf.ranks == fuse(D.X, X).ranks


def test_tensor_over_algebra_checks_sides():
    from lgdefect.orbifold import dual_structure, tensor_over_algebra
    E = equivariant_power(3, 1)
    D = dual_structure(E)
    with pytest.raises(OrbifoldError):
        tensor_over_algebra(D.X, E.X, E, D)
    with pytest.raises(OrbifoldError):
        equivariant_to_module(D)
