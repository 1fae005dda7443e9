from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lgdefect import pmatrix as pm
from lgdefect.mf import (MF, GroupAction, MFError, Morphism, adjoints, direct_sum, dual,
                         external_product, identity_defect, koszul, shift, supertrace, tensor,
                         tensor_morphism, theta_basis, trivial_mf, twist)
from lgdefect.models import cyclic_action, power_potential
from lgdefect.poly import RingSpec

from strategies import polys

R = RingSpec(("x", "y"))
x, y = R.gens()


def squares_to_potential(X: MF) -> bool:
    """Independent check of d^2 = W * 1 with plain matrix products."""
    DD = pm.matmul(X.D, X.D, X.ring)
    W1 = [[X.potential if i == j else X.ring.zero() for j in range(X.rank)] for i in range(X.rank)]
    return pm.equal(DD, W1)


def test_koszul_shape_and_convention():
    X = koszul([(x, y ** 2)])
    assert X.ranks == (1, 1)
    # d1 = a (odd -> even), d0 = b (even -> odd)
    assert X.d1 == [[x]] and X.d0 == [[y ** 2]]
    assert X.potential == x * y ** 2


def test_theta_basis_order():
    assert theta_basis(2) == [(), (0, 1), (0,), (1,)]
    assert theta_basis(3)[:4] == [(), (0, 1), (0, 2), (1, 2)]


def test_construction_rejects_wrong_potential():
    with pytest.raises(MFError):
        MF(R, x ** 3, [[x]], [[x]])


@st.composite
def random_mf(draw):
    """A random factorisation built from a random chain of constructors."""
    k = draw(st.integers(1, 2))
    pairs = [(draw(polys(R, max_terms=2, max_exp=2)), draw(polys(R, max_terms=2, max_exp=2)))
             for _ in range(k)]
    X = koszul(pairs, ring=R)
    op = draw(st.sampled_from(["none", "dual", "shift", "sum", "tensor", "adjoint", "twist"]))
    if op == "dual":
        X = dual(X)
    elif op == "shift":
        X = shift(X)
    elif op == "sum":
        X = direct_sum(X, shift(X))
    elif op == "tensor":
        a = draw(polys(R, max_terms=2, max_exp=2))
        b = draw(polys(R, max_terms=2, max_exp=2))
        X = tensor(X, koszul([(a, b)], ring=R))
    elif op == "adjoint":
        X = adjoints(X.copy_with(target_vars=("x",), source_vars=("y",)))[draw(st.integers(0, 1))]
    elif op == "twist":
        G = GroupAction.cyclic(("x", "y"), [[0, 1], [1, 0]])
        X = twist(G.elements[1], X, on=("x", "y"))
    return X


@settings(max_examples=200)
@given(X=random_mf())
def test_differential_squares_to_potential(X):
    assert squares_to_potential(X)


@given(W=polys(R, max_terms=4, max_exp=4))
def test_identity_defect_squares_to_potential(W):
    I = identity_defect(W)
    assert squares_to_potential(I)
    assert I.ranks == (2, 2)


def test_dual_and_adjoints():
    X = koszul([(x - y, x + y)]).copy_with(target_vars=("x",), source_vars=("y",))
    Xd = dual(X)
    assert Xd.potential == -X.potential
    assert (Xd.target_vars, Xd.source_vars) == (("y",), ("x",))
    # the double dual is X with d negated, isomorphic to X through diag(1, -1)
    Xdd = dual(Xd)
    assert Xdd.d0 == pm.neg(X.d0) and Xdd.d1 == pm.neg(X.d1)
    assert Morphism(X, Xdd, [[R.one(), R.zero()], [R.zero(), -R.one()]]).is_chain_map()
    left, right = adjoints(X)
    assert squares_to_potential(left) and squares_to_potential(right)


def test_external_product_disjointness():
    X = koszul([(x, x ** 2)])
    with pytest.raises(MFError):
        external_product(X, X)


@st.composite
def supermatrix(draw, r0, r1, parity):
    n = r0 + r1
    M = []
    for i in range(n):
        row = []
        for j in range(n):
            same = (i < r0) == (j < r0)
            if same == (parity == 0):
                row.append(draw(polys(R, max_terms=2, max_exp=2)))
            else:
                row.append(R.zero())
        M.append(row)
    return M


@given(data=st.data(), p=st.integers(0, 1), q=st.integers(0, 1))
def test_supertrace_cyclicity(data, p, q):
    r0, r1 = 2, 1
    A = data.draw(supermatrix(r0, r1, p))
    B = data.draw(supermatrix(r0, r1, q))
    lhs = supertrace(pm.matmul(A, B, R), r0, r1, R, (p + q) % 2)
    rhs = supertrace(pm.matmul(B, A, R), r0, r1, R, (p + q) % 2)
    sign = -1 if p * q else 1
    assert lhs == rhs.scale(sign)


def test_morphism_composition_and_chain_maps():
    X = koszul([(x, x ** 2)])
    one = X.identity()
    assert one.is_chain_map()
    assert (one @ one).equals(one)
    F = Morphism(X, X, [[x, R.zero()], [R.zero(), x]])
    assert F.is_chain_map()
    bad = Morphism(X, X, [[x, R.zero()], [R.zero(), R.zero()]])
    assert not bad.is_chain_map()


def test_tensor_morphism_of_identities_is_identity():
    X = koszul([(x, x ** 2)], ring=R)
    Y = koszul([(y, y ** 3)], ring=R)
    T = tensor_morphism(Y.identity(), X.identity())
    assert T.equals(tensor(Y, X).identity())


def test_group_action_table_and_twist():
    G = cyclic_action(3)
    assert G.order == 3
    g = G.elements[1]
    assert G.mul(1, 2) == G.identity_index
    assert G.inverse(1) == 2
    W = power_potential(3)
    assert G.preserves(W)
    X = koszul([(W.ring.gen("x"), W.ring.gen("x") ** 2)], ring=W.ring)
    gX = twist(g, X)
    z = W.ring.field.zeta()
    assert gX.d1[0][0] == W.ring.gen("x").scale(z)


def test_group_must_be_closed():
    from lgdefect.mf import GroupElement
    e = GroupElement(("x",), ((1,),))
    g = GroupElement(("x",), ((-1,),))
    with pytest.raises(MFError):
        GroupAction(("x",), [e, g, GroupElement(("x",), ((2,),))])
