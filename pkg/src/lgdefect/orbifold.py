"""Orbifold data: the algebra A_G of twisted identity defects and its modules.

A_G is the direct sum of the twisted units _gI over k[x, x'].  Its
multiplication is not k[x, x']-linear on the tensor product with a single
coefficient map: the block _gI (x) _hI -> _{gh}I sends the middle variables
to M_g x.  We therefore keep the structure maps blockwise, one semilinear
morphism per pair of group elements, and build each block on whatever
variable names a computation needs.

Naming: the outer variables of every block are ``(t, s)``; intermediate
variables are fresh primed copies of the base variables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import pmatrix as pm
from .homalg import (HomComplex, HomologyError, MorphismSystem, _d_fn, _post_fn, homotopic,
                     linearised, matrix_terms)
from .linalg import Echelon
from .mf import (MF, GroupAction, GroupElement, MFError, Morphism, direct_sum, identity_defect,
                 tensor, tensor_basis, tensor_morphism, twist, twist_morphism)
from .poly import Poly, RingSpec, embed, prime_name, rename
from .scalar import field_of, join_fields
from .mf import graded_ring_for


class OrbifoldError(MFError):
    pass


# ---------------------------------------------------------------------------
# small helpers


def rename_morphism(F: Morphism, mapping: dict, source: MF | None = None, target: MF | None = None) -> Morphism:
    """F with every variable renamed (matrix, coefficient map, both ends)."""
    source = source if source is not None else F.source.renamed(mapping)
    target = target if target is not None else F.target.renamed(mapping)
    ring = target.ring
    M = pm.apply(F.matrix, lambda p: rename(p, mapping, ring))
    subst = None
    if F.subst is not None:
        subst = {mapping.get(v, v): rename(p, mapping, ring) for v, p in F.full_subst().items()}
    return Morphism(source, target, M, F.parity, subst)


def associator(A: MF, B: MF, C: MF, source: MF | None = None, target: MF | None = None) -> Morphism:
    """The basis permutation (A (x) B) (x) C -> A (x) (B (x) C)."""
    AB = tensor(A, B, check=False)
    BC = tensor(B, C, check=False)
    source = source or tensor(AB, C, check=False)
    target = target or tensor(A, BC, check=False)
    ab = tensor_basis(A, B)
    bc_index = {b: k for k, b in enumerate(tensor_basis(B, C))}
    t_index = {b: k for k, b in enumerate(tensor_basis(A, BC))}
    M = pm.zeros(target.ring, target.rank, source.rank)
    one = target.ring.one()
    for col, (u, k) in enumerate(tensor_basis(AB, C)):
        i, j = ab[u]
        M[t_index[(i, bc_index[(j, k)])]][col] = one
    return Morphism(source, target, M, 0)


def level_names(names: Sequence[str], k: int) -> tuple[str, ...]:
    return tuple(names) if k == 0 else tuple(prime_name(v, k) for v in names)


def fresh_level(names: Sequence[str], taken) -> tuple[str, ...]:
    taken = set(taken)
    k = 1
    while True:
        cand = level_names(names, k)
        if not taken & set(cand):
            return cand
        k += 1


def _field_for(W: Poly, G: GroupAction):
    fld = W.ring.field
    for g in G.elements:
        for row in g.matrix:
            for c in row:
                fld = join_fields(fld, field_of(c))
    return fld


def normalise_potential(W: Poly, G: GroupAction | None = None) -> Poly:
    """W over a graded ring (weight 2) whose field contains the group's entries."""
    ring = W.ring
    if not ring.graded:
        ring = graded_ring_for(W)
    if G is not None:
        ring = ring.with_field(_field_for(W, G))
    Wn = embed(W, ring)
    return Wn


def section(F: Morphism) -> Morphism:
    """A chain map psi with F psi = 1 exactly (F even, possibly semilinear).

    psi: target(F) -> source(F) is linear over the target ring; the target's
    variables must all occur in the source ring.
    """
    S, T = F.source, F.target
    T_ext = T.with_ring(S.ring).copy_with(grading=None)
    H = HomComplex(T_ext, S)
    r, c = next((r, c) for r in range(T.rank) for c in range(S.rank) if F.matrix[r][c])
    w = T.ring.mono_weight(next(iter(F.matrix[r][c].terms)))
    # graded versions: H.a grades T, H.b grades S; F has degree w - a_r + b_c
    delta = -(w - H.a[r] + H.b[c])
    sysm = MorphismSystem()
    b = sysm.add_unknown(H, 0, delta)
    sysm.add_term(b, _d_fn(H, 0), tag="chain")
    sysm.add_term(b, _post_fn(F), tag="unit")
    sysm.add_rhs(matrix_terms(pm.identity(T.ring, T.rank)), tag="unit")
    sol = sysm.solve()
    if sol is None:
        raise OrbifoldError("the unit map has no strict section")
    return Morphism(T, S, pm.embed_matrix(sol[0].matrix, S.ring), 0)


# ---------------------------------------------------------------------------
# unit actions


class TwistedUnits:
    """Twisted identity defects of W and their unit actions on other defects."""

    def __init__(self, W: Poly, group: GroupAction | None = None):
        base = W.ring.variables
        if group is None:
            group = GroupAction.trivial(base)
        if tuple(group.variables) != tuple(base):
            raise OrbifoldError("group acts on different variables than the potential")
        if not group.preserves(W):
            raise OrbifoldError("group does not preserve the potential")
        self.W = normalise_potential(W, group)
        self.group = group
        self.base = tuple(base)
        self._cache: dict = {}

    def _memo(self, key, build):
        hit = self._cache.get(key)
        if hit is None:
            hit = build()
            self._cache[key] = hit
        return hit

    def element(self, g: int) -> GroupElement:
        return self.group.elements[g]

    def unit(self, t, s) -> MF:
        t, s = tuple(t), tuple(s)
        return self._memo(("I", t, s), lambda: identity_defect(self.W, t, s))

    def block(self, g: int, t, s) -> MF:
        """_gI on outer variables (t, s)."""
        t, s = tuple(t), tuple(s)
        return self._memo(("B", g, t, s), lambda: twist(self.element(g), self.unit(t, s), on=t))

    def graded_like(self, X: MF, names) -> MF:
        """X over a graded ring: ``names`` get the potential's degrees, the rest inferred."""
        if X.ring.graded:
            return X
        degs = dict(zip(names, self.W.ring.degrees))
        rest = [v for v in X.ring.variables if v not in degs]
        if rest:
            from .mf import infer_weights
            from .residue import outer_potentials
            _, Wsrc = outer_potentials(X)
            w = infer_weights(Wsrc)
            if w is None:
                return X
            degs.update(zip(Wsrc.ring.variables, w))
            if any(v not in degs for v in rest):
                return X
        ring = RingSpec(X.ring.variables, tuple(degs[v] for v in X.ring.variables), X.ring.field)
        return X.with_ring(ring)

    def left_unitor(self, X: MF, t) -> Morphism:
        """lambda_X: I(t, m) (x) X -> X(m -> t), where m are X's target variables."""
        m = tuple(X.target_vars)
        X = self.graded_like(X, m)
        t = tuple(t)
        I = self.unit(t, m)
        S = tensor(I, X)
        T = X.renamed(dict(zip(m, t)))
        M = pm.zeros(T.ring, T.rank, S.rank)
        one = T.ring.one()
        for col, (i, j) in enumerate(tensor_basis(I, X)):
            if i == 0:
                M[j][col] = one
        subst = {v: T.ring.gen(v) for v in S.ring.variables if v in T.ring.variables}
        subst.update({a: T.ring.gen(b) for a, b in zip(m, t)})
        return Morphism(S, T, M, 0, subst)

    def right_unitor(self, X: MF, s) -> Morphism:
        """rho_X: X (x) I(m, s) -> X(m -> s), where m are X's source variables."""
        m = tuple(X.source_vars)
        X = self.graded_like(X, m)
        s = tuple(s)
        I = self.unit(m, s)
        S = tensor(X, I)
        T = X.renamed(dict(zip(m, s)))
        M = pm.zeros(T.ring, T.rank, S.rank)
        one = T.ring.one()
        for col, (i, j) in enumerate(tensor_basis(X, I)):
            if j == 0:
                M[i][col] = one
        subst = {v: T.ring.gen(v) for v in S.ring.variables if v in T.ring.variables}
        subst.update({a: T.ring.gen(b) for a, b in zip(m, s)})
        return Morphism(S, T, M, 0, subst)

    def left_section(self, h: int, t, m, s) -> Morphism:
        """A strict section of the left unit action on _hI(m, s)."""
        key = ("psi", h, tuple(t), tuple(m), tuple(s))
        return self._memo(key, lambda: section(self.left_unitor(self.block(h, m, s), t)))

    def left_section_of(self, X: MF, t) -> Morphism:
        """A strict section of lambda_X: I(t, m) (x) X -> X."""
        # the cached entry keeps X alive, so its id stays unique
        key = ("psiX", id(X), tuple(t))
        return self._memo(key, lambda: (X, section(self.left_unitor(X, t))))[1]

    def mu(self, g: int, h: int, t, m, s) -> Morphism:
        """_gI(t, m) (x) _hI(m, s) -> _{gh}I(t, s), the g-twist of the unit action."""
        key = ("mu", g, h, tuple(t), tuple(m), tuple(s))

        def build():
            lam = self.left_unitor(self.block(h, m, s), t)
            src = tensor(self.block(g, t, m), self.block(h, m, s))
            tgt = self.block(self.group.mul(g, h), t, s)
            return twist_morphism(self.element(g), lam, src, tgt, on=tuple(t))
        return self._memo(key, build)

    def delta(self, g: int, h: int, t, m, s) -> Morphism:
        """_{gh}I(t, s) -> _gI(t, m) (x) _hI(m, s), a strict section of mu."""
        key = ("delta", g, h, tuple(t), tuple(m), tuple(s))

        def build():
            psi = self.left_section(h, t, m, s)
            src = self.block(self.group.mul(g, h), t, s)
            tgt = tensor(self.block(g, t, m), self.block(h, m, s))
            return twist_morphism(self.element(g), psi, src, tgt, on=tuple(t))
        return self._memo(key, build)


# ---------------------------------------------------------------------------
# the algebra A_G


@dataclass
class AxiomCheck:
    name: str
    mode: str  # "strict" or "homotopy"
    passed: bool
    location: tuple = ()
    detail: str = ""


@dataclass
class AxiomReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> dict:
        out: dict = {}
        for c in self.checks:
            ok, total = out.get(c.name, (0, 0))
            out[c.name] = (ok + c.passed, total + 1)
        return out

    def add(self, *args, **kw):
        self.checks.append(AxiomCheck(*args, **kw))


class OrbifoldAlgebra:
    """A_G = sum of _gI over k[x, x'], with blockwise structure maps.

    ``delta_block(g, h)`` is the unnormalised piece; the coproduct is
    (1/|G|) times the sum over all pairs.  The counit is |G| times the
    projection onto the untwisted block.
    """

    def __init__(self, W: Poly, group: GroupAction | None = None):
        self.units = TwistedUnits(W, group)
        self.W = self.units.W
        self.group = self.units.group
        self.base = self.units.base
        self.t = self.base
        self.s = level_names(self.base, 1)
        self.mid = level_names(self.base, 2)
        self.mid2 = level_names(self.base, 3)
        self._overrides: dict = {}

    @property
    def order(self) -> int:
        return self.group.order

    @property
    def e(self) -> int:
        return self.group.identity_index

    def block(self, g: int, t=None, s=None) -> MF:
        return self.units.block(g, t or self.t, s or self.s)

    def blocks(self) -> list[MF]:
        return [self.block(g) for g in range(self.order)]

    def carrier(self) -> MF:
        return direct_sum(*self.blocks())

    def mu(self, g: int, h: int, t=None, m=None, s=None) -> Morphism:
        t, m, s = t or self.t, m or self.mid, s or self.s
        F = self.units.mu(g, h, t, m, s)
        bad = self._overrides.get((g, h))
        if bad is not None:
            F = bad(F)
        return F

    def delta_block(self, g: int, h: int, t=None, m=None, s=None) -> Morphism:
        return self.units.delta(g, h, t or self.t, m or self.mid, s or self.s)

    def pairs_over(self, k: int):
        return [(g, self.group.mul(self.group.inverse(g), k)) for g in range(self.order)]

    def corrupt(self, g: int, h: int, entry=(0, 0), amount=1):
        """Negative control: perturb one entry of the (g, h) multiplication block."""
        def bad(F):
            M = [list(r) for r in F.matrix]
            i, j = entry
            M[i][j] = M[i][j] + F.ring.const(amount)
            return Morphism(F.source, F.target, M, F.parity, F.subst)
        self._overrides[(g, h)] = bad
        return self

    def eta(self) -> Morphism:
        """Inclusion I -> A_G of the untwisted block."""
        A = self.carrier()
        I = self.block(self.e)
        return Morphism(I, A, _block_inclusion(self.blocks(), self.e, A.ring), 0)

    def epsilon(self) -> Morphism:
        """|G| times the projection A_G -> I."""
        A = self.carrier()
        I = self.block(self.e)
        P = pm.transpose(_block_inclusion(self.blocks(), self.e, A.ring), I.rank)
        return Morphism(A, I, pm.scale(P, self.order), 0)


def _block_inclusion(blocks, k, ring):
    from .mf import direct_sum_basis
    basis = direct_sum_basis(blocks)
    M = pm.zeros(ring, len(basis), blocks[k].rank)
    one = ring.one()
    # inside a block, even vectors come first, as in the direct sum
    for row, (b, i) in enumerate(basis):
        if b == k:
            M[row][i] = one
    return M


def _strict(report, name, lhs: Morphism, rhs: Morphism, loc):
    diff = lhs.difference_location(rhs)
    report.add(name, "strict", diff is None, loc, "" if diff is None else f"differs at {diff}")


def _up_to_homotopy(report, name, lhs: Morphism, rhs: Morphism, loc):
    try:
        res = homotopic(lhs, rhs)
        report.add(name, "homotopy", bool(res), loc, res.reason)
    except HomologyError as exc:
        report.add(name, "homotopy", False, loc, str(exc))


def check_frobenius_axioms(A: OrbifoldAlgebra, axioms: Sequence[str] | None = None) -> AxiomReport:
    """Verify the separable Frobenius axioms block by block.

    Strict: associativity, both unit laws' left form, separability and the
    counit law on the unit side.  Up to homotopy: the right unit law, the
    right counit law and the two Frobenius identities.  Each failing check
    records the group elements of its block.
    """
    axioms = set(axioms or ("associativity", "unit", "separability", "counit", "frobenius"))
    G, n = A.group, A.order
    u = A.units
    rep = AxiomReport()
    t, m1, m2, s = A.t, A.mid, A.mid2, A.s
    inv_n = Fraction(1, n)

    if "associativity" in axioms:
        for g, h, k in itertools.product(range(n), repeat=3):
            Bg, Bh, Bk = u.block(g, t, m1), u.block(h, m1, m2), u.block(k, m2, s)
            gh, hk = G.mul(g, h), G.mul(h, k)
            lhs = A.mu(gh, k, t, m2, s) @ tensor_morphism(A.mu(g, h, t, m1, m2), Bk.identity())
            rhs = (A.mu(g, hk, t, m1, s) @ tensor_morphism(Bg.identity(), A.mu(h, k, m1, m2, s))
                   @ associator(Bg, Bh, Bk))
            _strict(rep, "associativity", lhs, rhs, (g, h, k))

    if "unit" in axioms:
        for h in range(n):
            lam = u.left_unitor(u.block(h, m1, s), t)
            _strict(rep, "left unit", A.mu(A.e, h, t, m1, s), lam, (h,))
        for g in range(n):
            rho = u.right_unitor(u.block(g, t, m1), s)
            rho_inv = section(rho)
            comp = A.mu(g, A.e, t, m1, s) @ rho_inv
            _up_to_homotopy(rep, "right unit", comp, u.block(g, t, s).identity(), (g,))

    if "separability" in axioms:
        for k in range(n):
            target = u.block(k, t, s)
            acc = None
            for g, h in A.pairs_over(k):
                part = A.mu(g, h, t, m1, s) @ A.delta_block(g, h, t, m1, s)
                part = linearised(part).scale(inv_n)
                acc = part if acc is None else acc + part
            _strict(rep, "separability", acc, target.identity(), (k,))

    if "counit" in axioms:
        for k in range(n):
            # (eps (x) 1) Delta only sees the untwisted left leg
            lam = u.left_unitor(u.block(k, m1, s), t)
            lhs = linearised(lam @ A.delta_block(A.e, k, t, m1, s))
            _strict(rep, "left counit", lhs, u.block(k, t, s).identity(), (k,))
            rho = u.right_unitor(u.block(k, t, m1), s)
            rhs = linearised(rho @ A.delta_block(k, A.e, t, m1, s))
            _up_to_homotopy(rep, "right counit", rhs, u.block(k, t, s).identity(), (k,))

    if "frobenius" in axioms:
        _check_frobenius(A, rep)
    return rep


def _check_frobenius(A: OrbifoldAlgebra, rep: AxiomReport):
    """(1 (x) mu)(Delta (x) 1) ~ Delta mu ~ (mu (x) 1)(1 (x) Delta).

    Every block of these maps is a map _gI (x) _hI -> _g'I (x) _h'I with
    g'h' = gh.  Conjugating with the homotopy equivalences mu_{g',h'} and
    Delta_{g,h} turns each block into an endomorphism of _{gh}I, where
    Delta mu gives exactly 1/|G|.
    """
    G, n = A.group, A.order
    u = A.units
    t, m, nn, s = A.t, A.mid, A.mid2, A.s
    inv_n = Fraction(1, n)
    for g, h in itertools.product(range(n), repeat=2):
        k = G.mul(g, h)
        Dgh = A.delta_block(g, h, t, m, s)
        expected = u.block(k, t, s).identity().scale(inv_n)
        Bg, Bh = u.block(g, t, m), u.block(h, m, s)
        for g2, h2 in A.pairs_over(k):
            close = A.mu(g2, h2, t, nn, s)
            # left form: split g = g2 l, then multiply l into h
            l = G.mul(G.inverse(g2), g)
            Bl = u.block(l, nn, m)
            step1 = tensor_morphism(A.delta_block(g2, l, t, nn, m), Bh.identity())
            step2 = associator(u.block(g2, t, nn), Bl, Bh)
            step3 = tensor_morphism(u.block(g2, t, nn).identity(), A.mu(l, h, nn, m, s))
            left = linearised(close @ step3 @ step2 @ step1 @ Dgh).scale(inv_n)
            _up_to_homotopy(rep, "frobenius (left)", left, expected, (g, h, g2, h2))
            # right form: split h = l h2, then multiply g into l
            l = G.mul(h, G.inverse(h2))
            Bl = u.block(l, m, nn)
            step1 = tensor_morphism(Bg.identity(), A.delta_block(l, h2, m, nn, s))
            step2 = _inverse_permutation(associator(Bg, Bl, u.block(h2, nn, s)))
            step3 = tensor_morphism(A.mu(g, l, t, m, nn), u.block(h2, nn, s).identity())
            right = linearised(close @ step3 @ step2 @ step1 @ Dgh).scale(inv_n)
            _up_to_homotopy(rep, "frobenius (right)", right, expected, (g, h, g2, h2))


def _inverse_permutation(P: Morphism) -> Morphism:
    return Morphism(P.target, P.source, pm.transpose(P.matrix, P.target.rank), 0)


# ---------------------------------------------------------------------------
# symmetry


@dataclass
class SymmetryVerdict:
    symmetric: bool
    determinants: list
    right_dims: list


def ag_is_symmetric(W: Poly, group: GroupAction, check_residues: bool = True) -> SymmetryVerdict:
    """A_G is symmetric iff det(g) = 1 for every g, iff dim_r(_gI) = 1 for every g.

    Both routes are evaluated; disagreement raises.
    """
    from .residue import right_dim
    units = TwistedUnits(W, group)
    dets = [g.det() for g in group.elements]
    by_det = all(d == 1 for d in dets)
    dims = []
    if check_residues:
        s = level_names(units.base, 1)
        for g in range(group.order):
            q = right_dim(units.block(g, units.base, s))
            dims.append(q.scalar if q.is_constant else q.value)
        by_res = all(d == 1 for d in dims)
        if by_res != by_det:
            raise OrbifoldError(f"symmetry routes disagree: determinants {dets}, right dimensions {dims}")
    return SymmetryVerdict(by_det, dets, dims)


# ---------------------------------------------------------------------------
# equivariant factorisations and A_G-modules


class EquivariantStructure:
    """Isomorphisms phi_g: _gX -> X, one per group element.

    The group acts on X's target variables (a left A_G-module), or on its
    source variables when ``side="source"`` (a right module).  Those
    variables must carry the group's own variable names.
    """

    def __init__(self, X: MF, group: GroupAction, phis: Sequence[Morphism], check: bool = True,
                 side: str = "target"):
        self.X = X
        self.group = group
        self.on = tuple(group.variables)
        self.side = side
        if side not in ("target", "source"):
            raise ValueError(f"side must be 'target' or 'source', got {side!r}")
        acted = X.target_vars if side == "target" else X.source_vars
        if tuple(acted or ()) != self.on:
            raise OrbifoldError(f"the group must act on the {side} variables of X")
        self.phis = list(phis)
        if len(self.phis) != group.order:
            raise OrbifoldError("need one isomorphism per group element")
        if check:
            self.validate()

    def twisted(self, g: int) -> MF:
        return twist(self.group.elements[g], self.X, on=self.on)

    def twist_map(self, g: int, F: Morphism, source: MF | None = None, target: MF | None = None) -> Morphism:
        el = self.group.elements[g]
        source = source or twist(el, F.source, on=self.on)
        target = target or twist(el, F.target, on=self.on)
        return twist_morphism(el, F, source, target, on=self.on)

    def cocycle_defects(self) -> list:
        """[(g, h, location)] where phi_gh != phi_g o g(phi_h)."""
        G = self.group
        bad = []
        for g, h in itertools.product(range(G.order), repeat=2):
            rhs = self.phis[g] @ self.twist_map(g, self.phis[h], source=self.twisted(G.mul(g, h)),
                                               target=self.twisted(g))
            loc = self.phis[G.mul(g, h)].difference_location(rhs)
            if loc is not None:
                bad.append((g, h, loc))
        return bad

    def validate(self):
        G = self.group
        for g, phi in enumerate(self.phis):
            if phi.source != self.twisted(g) or phi.target != self.X:
                raise OrbifoldError(f"phi_{g} has the wrong source or target")
            if phi.parity or not phi.is_chain_map():
                raise OrbifoldError(f"phi_{g} is not an even chain map")
        e = G.identity_index
        if not pm.is_scalar_identity(self.phis[e].matrix, 1):
            raise OrbifoldError("phi_e is not the identity")
        bad = self.cocycle_defects()
        if bad:
            g, h, loc = bad[0]
            raise OrbifoldError(f"cocycle condition fails for (g, h) = ({g}, {h}) at {loc}")

    def inverse_phi(self, g: int) -> Morphism:
        """phi_g^{-1} = g(phi_{g^-1}): X -> _gX."""
        gi = self.group.inverse(g)
        return self.twist_map(g, self.phis[gi], source=self.X, target=self.twisted(g))

    @staticmethod
    def from_generator(X: MF, group: GroupAction, generator: int, phi: Morphism,
                       check: bool = True, side: str = "target") -> "EquivariantStructure":
        """Extend phi_g for a generator of a cyclic group by the cocycle rule."""
        G = group
        on = tuple(group.variables)
        el = G.elements[generator]
        phis: dict = {G.identity_index: X.identity()}
        cur, k = generator, phi
        while cur not in phis:
            phis[cur] = k
            nxt = G.mul(generator, cur)
            src = twist(G.elements[nxt], X, on=on)
            k = phi @ twist_morphism(el, k, src, twist(el, X, on=on), on=on)
            cur = nxt
        # closing the orbit: phi_{g^order} must be the identity
        if not pm.is_scalar_identity(k.matrix, 1):
            raise OrbifoldError("cocycle condition fails: the generator's isomorphism has the wrong order")
        if len(phis) != G.order:
            raise OrbifoldError("the element does not generate the group")
        return EquivariantStructure(X, G, [phis[g] for g in range(G.order)], check=check, side=side)


class ModuleStructure:
    """A left A_G-module: actions rho_g: _gI(t, m) (x) X(m) -> X(t)."""

    def __init__(self, X: MF, units: TwistedUnits, actions: Sequence[Morphism], middle: Sequence[str]):
        self.X = X
        self.units = units
        self.actions = list(actions)
        self.t = tuple(X.target_vars)
        self.middle = tuple(middle)

    @property
    def group(self):
        return self.units.group

    def on_names(self, t) -> MF:
        return self.X.renamed(dict(zip(self.t, t)))

    def action(self, g: int, t=None, m=None) -> Morphism:
        t = tuple(t or self.t)
        m = tuple(m or self.middle)
        F = self.actions[g]
        if t == self.t and m == self.middle:
            return F
        mapping = dict(zip(self.middle, m))
        mapping.update(zip(self.t, t))
        return rename_morphism(F, mapping)

    def axiom_defects(self) -> list:
        """Strict module axioms; returns failing locations."""
        u = self.units
        G = self.group
        taken = set(self.X.ring.variables)
        m1 = fresh_level(self.t, taken)
        m2 = fresh_level(self.t, taken | set(m1))
        t = self.t
        bad = []
        lam = u.left_unitor(self.on_names(m1), t)
        loc = self.action(G.identity_index, t, m1).difference_location(lam)
        if loc is not None:
            bad.append(("unit", (G.identity_index,), loc))
        X2 = self.on_names(m2)
        for g, h in itertools.product(range(G.order), repeat=2):
            Bg, Bh = u.block(g, t, m1), u.block(h, m1, m2)
            lhs = self.action(G.mul(g, h), t, m2) @ tensor_morphism(u.mu(g, h, t, m1, m2), X2.identity())
            rhs = (self.action(g, t, m1) @ tensor_morphism(Bg.identity(), self.action(h, m1, m2))
                   @ associator(Bg, Bh, X2))
            loc = lhs.difference_location(rhs)
            if loc is not None:
                bad.append(("multiplication", (g, h), loc))
        return bad

    def validate(self):
        bad = self.axiom_defects()
        if bad:
            kind, where, loc = bad[0]
            raise OrbifoldError(f"module axiom ({kind}) fails at {where}: {loc}")


def _middle_for(X: MF, names) -> tuple:
    return fresh_level(names, set(X.ring.variables))


def equivariant_to_module(E: EquivariantStructure, units: TwistedUnits | None = None) -> ModuleStructure:
    """rho_g = phi_g o g(lambda_X)."""
    if E.side != "target":
        raise OrbifoldError("module actions are built for structures on the target variables")
    units = units or TwistedUnits(_target_potential(E), E.group)
    X = E.X
    t = E.on
    m = _middle_for(X, t)
    Xm = X.renamed(dict(zip(t, m)))
    lam = units.left_unitor(Xm, t)
    actions = []
    for g in range(E.group.order):
        el = E.group.elements[g]
        tw = twist_morphism(el, lam, tensor(units.block(g, t, m), Xm), E.twisted(g), on=t)
        actions.append(E.phis[g] @ tw)
    return ModuleStructure(X, units, actions, m)


def module_to_equivariant(M: ModuleStructure, check: bool = True) -> EquivariantStructure:
    """phi_g = rho_g o g(lambda_X^{-1}), with a strict section of lambda_X."""
    u = M.units
    X, t, m = M.X, M.t, M.middle
    Xm = X.renamed(dict(zip(t, m)))
    psi = section(u.left_unitor(Xm, t))
    phis = []
    for g in range(M.group.order):
        el = M.group.elements[g]
        tw = twist_morphism(el, psi, twist(el, X, on=t), tensor(u.block(g, t, m), Xm), on=t)
        phi = linearised(M.action(g) @ tw)
        phis.append(Morphism(twist(el, X, on=t), X, phi.matrix, 0))
    return EquivariantStructure(X, M.group, phis, check=check)


def _target_potential(E: EquivariantStructure) -> Poly:
    from .residue import restrict
    from .residue import outer_potentials
    X = E.X
    if X.source_vars:
        V, _ = outer_potentials(X)
        return V
    return restrict(X.potential, X.target_vars)


def round_trip_defects(E: EquivariantStructure, units: TwistedUnits | None = None) -> list:
    """Elements g where module_to_equivariant(equivariant_to_module(E)) differs from E."""
    M = equivariant_to_module(E, units)
    back = module_to_equivariant(M)
    return [g for g in range(E.group.order) if back.phis[g].difference_location(E.phis[g]) is not None]


# ---------------------------------------------------------------------------
# projectors onto module maps


def module_projector(MX: ModuleStructure, MY: ModuleStructure, f: Morphism) -> Morphism:
    """pi_A(f) = rho_Y (1 (x) f)(1 (x) rho_X)(Delta eta (x) 1) lambda_X^{-1}.

    For A_G the coproduct leg is (1/|G|) sum_g Delta_{g, g^-1}, so
    pi(f) = (1/|G|) sum_g rho^Y_g (1 (x) f)(1 (x) rho^X_{g^-1}) (Delta_{g,g^-1} (x) 1) psi_X.
    """
    u = MX.units
    G = u.group
    t = MX.t
    taken = set(MX.X.ring.variables) | set(MY.X.ring.variables)
    m = fresh_level(t, taken)
    n = fresh_level(t, taken | set(m))
    Xm, Xn = MX.on_names(m), MX.on_names(n)
    Yn = MY.on_names(n)
    psi = u.left_section_of(Xm, t)
    fn = rename_morphism(f, dict(zip(t, n)), source=Xn, target=Yn)
    acc = None
    for g in range(G.order):
        gi = G.inverse(g)
        Bg, Bgi = u.block(g, t, n), u.block(gi, n, m)
        step = tensor_morphism(u.delta(g, gi, t, n, m), Xm.identity())
        step = associator(Bg, Bgi, Xm) @ step
        step = tensor_morphism(Bg.identity(), MX.action(gi, n, m)) @ step
        step = tensor_morphism(Bg.identity(), fn) @ step
        step = MY.action(g, t, n) @ step
        part = linearised(step @ psi)
        acc = part if acc is None else acc + part
    acc = acc.scale(Fraction(1, G.order))
    return Morphism(MX.X, MY.X, pm.embed_matrix(acc.matrix, MY.X.ring), f.parity)


def group_average(EX: EquivariantStructure, EY: EquivariantStructure, f: Morphism) -> Morphism:
    """(1/|G|) sum_g phi^Y_g o g(f) o (phi^X_g)^{-1}."""
    G = EX.group
    acc = None
    for g in range(G.order):
        gf = EX.twist_map(g, f, source=EX.twisted(g), target=EY.twisted(g))
        part = EY.phis[g] @ gf @ EX.inverse_phi(g)
        part = linearised(part)
        acc = part if acc is None else acc + part
    acc = acc.scale(Fraction(1, G.order))
    return Morphism(EX.X, EY.X, acc.matrix, f.parity)


def _image_rank(H: HomComplex, images) -> int:
    ech = Echelon()
    for F in images:
        coords = H.coordinates(F)
        ech.add({k: c for k, c in enumerate(coords) if c})
    return ech.rank


@dataclass
class OrbifoldHom:
    dims: tuple
    total: tuple
    basis: dict  # parity -> projected representatives spanning the image


def orbifold_hom(MX, MY, method: str = "projector") -> OrbifoldHom:
    """Dimensions of Hom_A(X, Y) as the rank of the projector on cohomology.

    ``MX`` and ``MY`` are module structures (``method='projector'``) or
    equivariant structures (``method='average'``, the group-average oracle).
    """
    if method == "projector":
        X, Y = MX.X, MY.X
        proj = lambda f: module_projector(MX, MY, f)
    elif method == "average":
        X, Y = MX.X, MY.X
        proj = lambda f: group_average(MX, MY, f)
    else:
        raise ValueError(f"unknown method {method!r}")
    H = HomComplex(X, Y)
    dims, total, basis = [], [], {}
    for p in (0, 1):
        B = H.basis(p)
        total.append(len(B))
        imgs = [proj(Morphism(X, Y, pm.embed_matrix(b.matrix, Y.ring), p)) for b in B]
        dims.append(_image_rank(H, imgs))
        basis[p] = _independent(H, imgs)
    return OrbifoldHom(tuple(dims), tuple(total), basis)


def _independent(H: HomComplex, maps) -> list:
    ech = Echelon()
    out = []
    for F in maps:
        coords = H.coordinates(F)
        r, _ = ech.add({k: c for k, c in enumerate(coords) if c})
        if r is not None:
            out.append(F)
    return out


# ---------------------------------------------------------------------------
# A_G as a module over itself, bimodule maps and the bulk space


def _block_permutation(A: OrbifoldAlgebra, g: int) -> Morphism:
    """phi_g: _g(A_G) -> A_G, sending the twisted block _g(_kI) = _{gk}I to its place."""
    from .mf import direct_sum_basis
    blocks = A.blocks()
    C = A.carrier()
    el = A.group.elements[g]
    src = twist(el, C, on=A.t)
    basis = direct_sum_basis(blocks)
    index = {b: r for r, b in enumerate(basis)}
    M = pm.zeros(C.ring, C.rank, C.rank)
    one = C.ring.one()
    for col, (k, i) in enumerate(basis):
        M[index[(A.group.mul(g, k), i)]][col] = one
    return Morphism(src, C, M, 0)


def algebra_as_equivariant(A: OrbifoldAlgebra) -> EquivariantStructure:
    C = A.carrier()
    return EquivariantStructure(C, A.group, [_block_permutation(A, g) for g in range(A.order)])


def algebra_as_module(A: OrbifoldAlgebra) -> ModuleStructure:
    """A_G as a left module; its actions are the blocks mu_{g,k}."""
    return equivariant_to_module(algebra_as_equivariant(A), A.units)


def _split_blocks(A: OrbifoldAlgebra, F: Morphism, t=None, s=None) -> dict:
    """{(k_out, k_in): block map} of a carrier endomorphism."""
    from .mf import direct_sum_basis
    blocks = [A.block(g, t, s) for g in range(A.order)]
    basis = direct_sum_basis(blocks)
    rows = {k: [r for r, b in enumerate(basis) if b[0] == k] for k in range(A.order)}
    out = {}
    for ko in range(A.order):
        for ki in range(A.order):
            M = pm.submatrix(F.matrix, rows[ko], rows[ki])
            M = pm.embed_matrix(M, blocks[ko].ring)
            if not pm.is_zero(M):
                out[(ko, ki)] = Morphism(blocks[ki], blocks[ko], M, F.parity)
    return out


def _join_blocks(A: OrbifoldAlgebra, parts: dict, parity: int) -> Morphism:
    from .mf import direct_sum_basis
    blocks = A.blocks()
    C = A.carrier()
    basis = direct_sum_basis(blocks)
    pos = {b: r for r, b in enumerate(basis)}
    M = pm.zeros(C.ring, C.rank, C.rank)
    for (ko, ki), F in parts.items():
        for i, row in enumerate(F.matrix):
            for j, p in enumerate(row):
                if p:
                    r, c = pos[(ko, i)], pos[(ki, j)]
                    M[r][c] = M[r][c] + embed(p, C.ring)
    return Morphism(C, C, M, parity)


def right_module_projector(A: OrbifoldAlgebra, f: Morphism) -> Morphism:
    """Project a carrier endomorphism onto right A_G-module maps, block by block.

    pi(f) = (1/|G|) sum_g mu (f (x) 1)(mu (x) 1)(1 (x) Delta_{g,g^-1}) rho^{-1};
    the right action on _kI (x) _gI is mu_{k,g}, whose coefficient map
    depends on k, hence the blockwise evaluation.
    """
    u = A.units
    G = A.group
    t, s, m, n = A.t, A.s, A.mid, A.mid2
    fb = _split_blocks(A, f)
    fb_n = {key: rename_morphism(F, dict(zip(s, n)), source=u.block(key[1], t, n), target=u.block(key[0], t, n))
            for key, F in fb.items()}
    parts: dict = {}
    for k in range(G.order):
        Bk = u.block(k, t, m)
        rho_inv = section(u.right_unitor(Bk, s))
        for g in range(G.order):
            gi = G.inverse(g)
            kg = G.mul(k, g)
            Bg, Bgi = u.block(g, m, n), u.block(gi, n, s)
            head = tensor_morphism(Bk.identity(), u.delta(g, gi, m, n, s))
            head = _inverse_permutation(associator(Bk, Bg, Bgi)) @ head
            head = tensor_morphism(u.mu(k, g, t, m, n), Bgi.identity()) @ head
            head = head @ rho_inv
            for (ko, ki), F in fb_n.items():
                if ki != kg:
                    continue
                step = tensor_morphism(F, Bgi.identity()) @ head
                step = u.mu(ko, gi, t, n, s) @ step
                part = linearised(step)
                key = (G.mul(ko, gi), k)
                parts[key] = part if key not in parts else parts[key] + part
    inv = Fraction(1, G.order)
    parts = {key: Morphism(u.block(key[1], t, s), u.block(key[0], t, s), pm.scale(F.matrix, inv), f.parity)
             for key, F in parts.items()}
    return _join_blocks(A, parts, f.parity)


def bimodule_projector(A: OrbifoldAlgebra, f: Morphism, module: ModuleStructure | None = None) -> Morphism:
    """pi_{AA}(f): left projector followed by the right one."""
    M = module or algebra_as_module(A)
    return right_module_projector(A, module_projector(M, M, f))


@dataclass
class BulkSpace:
    dims: tuple
    total: tuple
    basis: list


def bulk_space(A: OrbifoldAlgebra) -> BulkSpace:
    """End_{AA}(A) as the image of the bimodule projector on End(A) cohomology."""
    C = A.carrier()
    M = algebra_as_module(A)
    H = HomComplex(C, C)
    dims, total, basis = [], [], []
    for p in (0, 1):
        B = H.basis(p)
        total.append(len(B))
        imgs = [bimodule_projector(A, Morphism(C, C, pm.embed_matrix(b.matrix, C.ring), p), M) for b in B]
        keep = _independent(H, imgs)
        dims.append(len(keep))
        basis.extend(keep)
    return BulkSpace(tuple(dims), tuple(total), basis)


def orbifold_pairing(A: OrbifoldAlgebra, phi1: Morphism, phi2: Morphism):
    """(-1)^C(n+1,2) Res[str(phi1 phi2 dd_x d_A dd_x' d_A) dx dx' / (dW(x), dW(x'))]."""
    from math import comb
    from .mf import supertrace
    from .poly import partial_derivative
    from .residue import lambda_product, residue_scalar
    C = A.carrier()
    ring = C.ring
    comp = pm.matmul(pm.embed_matrix(phi1.matrix, ring), pm.embed_matrix(phi2.matrix, ring), ring)
    names = tuple(A.t) + tuple(A.s)
    lam = lambda_product(C, names)
    parity = (phi1.parity + phi2.parity + len(names)) % 2
    st = supertrace(pm.matmul(comp, lam, ring), C.r0, C.r1, ring, parity)
    Wt = rename(A.W, dict(zip(A.base, A.t)), ring)
    Ws = rename(A.W, dict(zip(A.base, A.s)), ring)
    dens = [partial_derivative(Wt, v) for v in A.t] + [partial_derivative(Ws, v) for v in A.s]
    val = residue_scalar(st, dens, names)
    n = len(A.base)
    return -val if comb(n + 1, 2) % 2 else val


def bulk_gram(A: OrbifoldAlgebra, space: BulkSpace | None = None) -> list:
    space = space or bulk_space(A)
    return [[orbifold_pairing(A, a, b) for b in space.basis] for a in space.basis]


def orbifold_boundary_bulk(M: ModuleStructure, psi: Morphism) -> Poly:
    """Untwisted-sector part of the orbifold boundary-bulk map: beta^X(pi_A(psi)).

    Only the component in Jac(W) is computed; twisted-sector components
    need the adjunction maps, which are not constructed here.
    """
    from .residue import boundary_bulk
    return boundary_bulk(module_projector(M, M, psi), M.X)


# ---------------------------------------------------------------------------
# tensor products over A_G


@dataclass
class GroupTensor:
    mf: MF  # image of the averaging idempotent
    fused: object  # FusionResult of the plain tensor product
    projector: Morphism  # the averaging idempotent on fused.mf (up to homotopy)
    splitting: object  # homalg Splitting of the projector


def _diagonal_characters(el: GroupElement):
    M = el.matrix
    n = len(M)
    if any(M[i][j] for i in range(n) for j in range(n) if i != j):
        raise OrbifoldError("tensor products over A_G need a diagonal group action")
    return [M[i][i] for i in range(n)]


def dual_structure(E: EquivariantStructure) -> EquivariantStructure:
    """The structure on X^v (group acting on its source): psi_g = (phi_g^{-1})^T."""
    from .mf import dual
    if E.side != "target":
        raise OrbifoldError("dual_structure expects a structure on the target variables")
    Y = dual(E.X)
    G = E.group
    psis = []
    for g in range(G.order):
        inv = E.inverse_phi(g).matrix
        psis.append(Morphism(twist(G.elements[g], Y, on=E.on), Y, pm.transpose(inv, E.X.rank), 0))
    return EquivariantStructure(Y, G, psis, side="source")


def tensor_over_algebra(Y: MF, X: MF, EY: EquivariantStructure, EX: EquivariantStructure,
                        safety: int | None = None) -> GroupTensor:
    """Y (x)_{A_G} X as the image of the group average on the fusion Y (x) X.

    EY acts on the source variables of Y, EX on the target variables of X;
    both carry the same diagonal group acting on the intermediate variables.
    On the infinite tensor product the group acts by m -> (psi_g (x) phi_g)
    m(g y), which preserves the truncation y^N; its average is transported to
    the finite model through the reduction maps and split there.
    """
    from .fusion import fusion_details
    from .homalg import split_idempotent
    if EY.side != "source" or EX.side != "target":
        raise OrbifoldError("EY must act on the source of Y and EX on the target of X")
    if EY.X != Y or EX.X != X:
        raise OrbifoldError("equivariant structures do not belong to the given factorisations")
    if EY.group.variables != EX.group.variables or \
            [g.matrix for g in EY.group.elements] != [g.matrix for g in EX.group.elements]:
        raise OrbifoldError("the two structures must use the same group action")
    G = EX.group
    res = fusion_details(Y, X, G.variables, safety=safety, keep_maps=True)
    L = res.mf
    M = res.tensor
    ring = M.ring
    mids = res.intermediate
    qring = ring.sub(M.target_vars + M.source_vars)
    ren_y = dict(zip(G.variables, mids))
    ren_x = dict(zip(G.variables, mids))
    ren_x.update(res.renaming)
    names = ring.variables
    mid_pos = [names.index(v) for v in mids]
    outer = [names.index(v) for v in qring.variables]
    from .poly import BITS, FIELD_MASK

    def split(m):
        e = tuple((m >> (BITS * p)) & FIELD_MASK for p in mid_pos)
        q = 0
        for k, p in enumerate(outer):
            q |= ((m >> (BITS * p)) & FIELD_MASK) << (BITS * k)
        return e, q

    bounds = res.bounds
    index = {b: n for n, b in enumerate(res.q_basis)}
    basis = tensor_basis(Y, X)
    inv_n = qring.field.coerce(Fraction(1, G.order))
    one = qring.field.coerce(1)
    # columns of the averaged action on Q, as {row: {mid exponent shift: poly}}
    actions = []
    for g in range(G.order):
        chars = _diagonal_characters(G.elements[g])
        PY = [[rename(p, ren_y, ring) for p in row] for row in EY.phis[g].matrix]
        PX = [[rename(p, ren_x, ring) for p in row] for row in EX.phis[g].matrix]
        cols = []
        for (i, j) in basis:
            col = []
            for r, (k, l) in enumerate(basis):
                a, b = PY[k][i], PX[l][j]
                if a and b:
                    for mono, c in (a * b).terms.items():
                        e, q = split(mono)
                        col.append((r, e, q, c))
            cols.append(col)
        actions.append((chars, cols))

    def act(vec):
        """Average of the group action on a sparse vector over the truncation basis."""
        out: dict = {}
        for chars, cols in actions:
            for n, p in vec.items():
                f, e = res.q_basis[n]
                chi = one
                for c, k in zip(chars, e):
                    chi = chi * c ** k
                for r, em, q, c in cols[f]:
                    tgt = tuple(a + b for a, b in zip(e, em))
                    if any(t >= N for t, N in zip(tgt, bounds)):
                        continue
                    row = index[(r, tgt)]
                    term = p * Poly(qring, {q: c * chi * inv_n})
                    old = out.get(row)
                    new = term if old is None else old + term
                    if new:
                        out[row] = new
                    else:
                        out.pop(row, None)
        return out

    images = [act(v) for v in res.iota]
    P = pm.zeros(qring, L.rank, L.rank)
    for l, img in enumerate(images):
        for k, row in enumerate(res.pi):
            acc = qring.zero()
            for o, p in img.items():
                w = row.get(o)
                if w:
                    acc = acc + w * p
            P[k][l] = acc
    e = Morphism(L, L, pm.embed_matrix(P, L.ring), 0)
    if not e.is_chain_map():
        raise OrbifoldError("averaged action is not a chain map; check the equivariant structures")
    sp = split_idempotent(L, e)
    return GroupTensor(sp.image, res, e, sp)


# ---------------------------------------------------------------------------
# the A-D algebra


def summand_multiplicity(S: MF, A: MF) -> int:
    """How often S (with any parity or degree shift) splits off A.

    S must have a local degree-zero endomorphism ring spanned by 1_S.  For
    each parity p and degree delta the composition pairing
    H^{p,delta}(S, A) x H^{p,-delta}(A, S) -> H^{0,0}(S, S) = k 1_S
    is a matrix whose rank counts the copies of S[p]{delta} in A.
    """
    HSA = HomComplex(S, A)
    HAS = HomComplex(HSA.Y, HSA.X)
    HSS = HomComplex(HSA.X, HSA.X)
    unit_basis = HSS.basis_at(0, 0)
    if len(unit_basis) != 1:
        raise OrbifoldError("degree-zero endomorphisms of S are not one-dimensional")
    total = 0
    for (p, delta), _ in sorted(HSA.profile().items()):
        ins = HSA.basis_at(p, delta)
        outs = HAS.basis_at(p, -delta)
        if not outs:
            continue
        ech = Echelon()
        for q in outs:
            row = {}
            for k, i in enumerate(ins):
                comp = Morphism(HSA.X, HSA.X, pm.matmul(q.matrix, i.matrix, HSA.ring), 0)
                val = _unit_coordinate(HSS, comp)
                if val:
                    row[k] = val
            ech.add(row)
        total += ech.rank
    return total


def _unit_coordinate(H: HomComplex, F: Morphism):
    comps = H.components(F)
    vec = comps.get(Fraction(0), {})
    reps, ech, _ = H._cohomology(0, 0)
    r, acc = ech.reduce(vec)
    if r:
        raise HomologyError("degree-zero component is not a cocycle")
    return -acc.get(0, 0)


@dataclass
class ADReport:
    d: int
    algebra: object  # FusionResult for X^dagger (x) X
    algebra_ranks: tuple
    hom_unit_algebra: tuple
    unit_multiplicity: int
    j_multiplicity: int
    square_ranks: tuple
    unit_ranks: tuple
    square_hom: tuple
    unit_hom: tuple
    unit_in_square: int
    qdims: dict


def build_AG(W: Poly, group: GroupAction | None = None) -> OrbifoldAlgebra:
    """A_G for W and a group of linear symmetries (trivial group if omitted)."""
    return OrbifoldAlgebra(W, group)


def build_Ad(d: int, safety: int | None = None):
    """A_d = X^dagger (x) X for the A-D defect, reduced to finite rank."""
    from .fusion import fusion_details
    from .mf import right_adjoint
    from .models import ad_defect
    X = ad_defect(d)
    return fusion_details(right_adjoint(X), X, safety=safety)


def ad_structure(d: int, safety: int | None = None) -> ADReport:
    """Numerical consequences of A_d = I + J_d and J_d (x) J_d = I."""
    from .fusion import fusion_details
    from .homalg import hom_dimensions
    from .models import a_identity, jd_candidate
    from .residue import right_dim
    res = build_Ad(d, safety)
    A = res.mf
    t, s = A.target_vars, A.source_vars
    I = a_identity(d, t, s)
    J = jd_candidate(d, t, s)
    sq = fusion_details(J, J, safety=safety).mf
    sq = sq.renamed(dict(zip(sq.source_vars, s)))
    qd = {"A": right_dim(A).value, "I": right_dim(I).value, "J": right_dim(J).value}
    return ADReport(
        d=d, algebra=res, algebra_ranks=A.ranks,
        hom_unit_algebra=hom_dimensions(I, A),
        unit_multiplicity=summand_multiplicity(I, A),
        j_multiplicity=summand_multiplicity(J, A),
        square_ranks=sq.ranks, unit_ranks=I.ranks,
        square_hom=hom_dimensions(sq, sq), unit_hom=hom_dimensions(I, I),
        unit_in_square=summand_multiplicity(I, sq),
        qdims=qd)
