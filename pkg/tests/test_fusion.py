from fractions import Fraction

import pytest

from lgdefect.fusion import FusionError, default_safety, fuse, fusion_details
from lgdefect.homalg import hom_dimensions, minimal_model
from lgdefect.mf import dual, identity_defect, koszul, unit_mf
from lgdefect.models import ad_defect, knorrer_K
from lgdefect.poly import RingSpec, exact_divide
from lgdefect.residue import left_dim, outer_potentials, right_dim


def koszul_defect(l, d):
    """Rank (1|1) defect from x^{ld} (source x) to y^d (target y)."""
    R = RingSpec(("y", "x"), (Fraction(2, d), Fraction(2, d * l)))
    y, x = R.gens()
    a = y - x ** l
    return koszul([(a, exact_divide(y ** d - x ** (l * d), a))], ring=R).copy_with(
        target_vars=("y",), source_vars=("x",))


def boundary(n, d):
    R = RingSpec(("y",), (Fraction(2, d),))
    y = R.gen("y")
    return koszul([(y ** n, y ** (d - n))], ring=R)


CORPUS = ([("defect", l, d) for l, d in [(2, 3), (3, 2), (3, 3), (2, 4), (2, 2), (1, 3), (1, 5), (4, 2)]]
          + [("boundary", n, d) for n, d in [(1, 3), (2, 5), (1, 4)]])


def build(kind, a, b):
    return koszul_defect(a, b) if kind == "defect" else boundary(a, b)


@pytest.mark.parametrize("kind, a, b", CORPUS)
def test_unit_law(kind, a, b):
    X = build(kind, a, b)
    V, _ = outer_potentials(X)
    I = identity_defect(V, ("y",), ("w",))
    F = fuse(I, X.renamed({"y": "w"}))
    assert F.ranks == minimal_model(X).mf.ranks
    assert F.ring.variables == X.ring.variables
    Fx = F.with_ring(X.ring)
    assert hom_dimensions(Fx, Fx) == hom_dimensions(X, X)
    assert hom_dimensions(Fx, X) == hom_dimensions(X, X)


@pytest.mark.parametrize("kind, a, b", [c for c in CORPUS if c[0] == "defect"])
def test_right_unit_law(kind, a, b):
    X = build(kind, a, b)
    _, W = outer_potentials(X)
    I = identity_defect(W, ("w",), ("x",))
    F = fuse(X.renamed({"x": "w"}), I)
    assert F.ranks == minimal_model(X).mf.ranks
    Fx = F.renamed(dict(zip(F.source_vars, ("x",))), X.ring)
    assert hom_dimensions(Fx, X) == hom_dimensions(X, X)


def test_knorrer_fusion_is_the_unit():
    K = knorrer_K()
    F = fuse(dual(K), K, ("u", "v"))
    assert hom_dimensions(F, unit_mf(F.ring)) == (1, 0)
    assert F.ranks == (1, 0)


@pytest.mark.parametrize("kind, a, b", CORPUS[:4])
def test_fusion_is_stable_under_safety(kind, a, b):
    X = build(kind, a, b)
    V, _ = outer_potentials(X)
    I = identity_defect(V, ("y",), ("w",))
    Xw = X.renamed({"y": "w"})
    results = [fuse(I, Xw, safety=s) for s in (1, 2, 4)]
    assert results[0] == results[1] == results[2]


def test_knorrer_fusion_stable_under_safety():
    K = knorrer_K()
    assert fuse(dual(K), K, ("u", "v"), safety=1) == fuse(dual(K), K, ("u", "v"), safety=3)


def test_constant_dimensions_multiply_under_fusion():
    from lgdefect.mf import right_adjoint
    X = ad_defect(2)
    res = fusion_details(right_adjoint(X), X)
    assert res.mf.ranks == (4, 4)
    assert res.safety == default_safety()
    A = res.mf
    assert right_dim(A).scalar == right_dim(X).scalar * left_dim(X).scalar
    K = knorrer_K()
    assert left_dim(K).scalar * right_dim(K).scalar == 1  # K^v (x) K is the unit


def test_mismatched_potentials_are_rejected():
    X = koszul_defect(2, 3)
    with pytest.raises(FusionError):
        fuse(X, X)


def test_safety_environment(monkeypatch):
    monkeypatch.setenv("LGDEFECT_SAFETY", "3")
    assert default_safety() == 3
    monkeypatch.setenv("LGDEFECT_SAFETY", "zero")
    with pytest.raises(FusionError):
        default_safety()
