"""Matrix factorisations, (semilinear) morphisms between them, and constructors.

Conventions used throughout the package:

* A factorisation of W on X = X0 + X1 (ranks r0, r1) stores ``d0: X0 -> X1``
  (an r1 x r0 matrix) and ``d1: X1 -> X0`` (r0 x r1).  The full differential
  acts on the basis "even vectors first, then odd".
* ``koszul([(a, b)])`` has full differential ((0, a), (b, 0)), i.e. d1 = a, d0 = b.
* Tensor products use d(y x) = d(y) x + (-1)^|y| y d(x); the basis of Y (x) X
  lists the even part Y0X0, Y1X1 and then the odd part Y0X1, Y1X0, each
  lexicographically.
* A defect X in LG(W, V) is a factorisation of V(z) - W(x); ``target_vars``
  holds z and ``source_vars`` holds x.  Boundary factorisations have no source.
* Group elements act on polynomials by substitution x -> M x.  The twist
  gX replaces each matrix entry p by p(M x) on the twisted variables, and the
  product g*h is the composite automorphism, so M_{gh} = M_h M_g.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import pmatrix as pm
from .poly import (Poly, RingSpec, divided_difference, embed, homogeneity, partial_derivative,
                   prime_name, rename, substitute)


class MFError(ValueError):
    """Invalid matrix factorisation or morphism data."""


class MF:
    """A finite-rank matrix factorisation over a polynomial ring."""

    def __init__(self, ring: RingSpec, potential: Poly, d0, d1, r0: int | None = None,
                 r1: int | None = None, grading=None, target_vars=None, source_vars=None,
                 check: bool = True, name: str | None = None):
        self.ring = ring
        self.potential = potential if potential.ring.variables == ring.variables else embed(potential, ring)
        self.r0 = len(d1) if r0 is None else r0
        self.r1 = len(d0) if r1 is None else r1
        self.d0 = [[_fix(p, ring) for p in row] for row in d0]
        self.d1 = [[_fix(p, ring) for p in row] for row in d1]
        self.grading = None if grading is None else tuple(Fraction(g) for g in grading)
        if target_vars is None and source_vars is None:
            target_vars, source_vars = tuple(ring.variables), ()
        self.target_vars = tuple(target_vars) if target_vars is not None else None
        self.source_vars = tuple(source_vars) if source_vars is not None else None
        self.name = name
        self._D = None
        self._validate_shapes()
        if check:
            self.check()

    # ------------------------------------------------------------------
    def _validate_shapes(self):
        if len(self.d0) != self.r1 or any(len(r) != self.r0 for r in self.d0):
            raise MFError(f"d0 must be {self.r1}x{self.r0}")
        if len(self.d1) != self.r0 or any(len(r) != self.r1 for r in self.d1):
            raise MFError(f"d1 must be {self.r0}x{self.r1}")
        if self.grading is not None and len(self.grading) != self.rank:
            raise MFError("grading length does not match the rank")
        for vs in (self.target_vars or ()) + (self.source_vars or ()):
            if vs not in self.ring.variables:
                raise MFError(f"split variable {vs} not in ring")

    @property
    def rank(self) -> int:
        return self.r0 + self.r1

    @property
    def ranks(self) -> tuple[int, int]:
        return (self.r0, self.r1)

    def parity(self, i: int) -> int:
        return 0 if i < self.r0 else 1

    @property
    def D(self) -> pm.Matrix:
        """Full (r0+r1) square differential, even basis first."""
        if self._D is None:
            self._D = pm.block([[None, self.d1], [self.d0, None]], [self.r0, self.r1],
                               [self.r0, self.r1], self.ring)
        return self._D

    @staticmethod
    def from_full(ring, potential, D, r0, r1, **kw) -> "MF":
        d0 = [[D[r0 + i][j] for j in range(r0)] for i in range(r1)]
        d1 = [[D[i][r0 + j] for j in range(r1)] for i in range(r0)]
        for i in range(r0):
            for j in range(r0):
                if D[i][j]:
                    raise MFError("differential must be odd")
        for i in range(r1):
            for j in range(r1):
                if D[r0 + i][r0 + j]:
                    raise MFError("differential must be odd")
        return MF(ring, potential, d0, d1, r0, r1, **kw)

    def check(self):
        W = self.potential
        a = pm.matmul(self.d1, self.d0, self.ring) if self.r0 and self.r1 else None
        b = pm.matmul(self.d0, self.d1, self.ring) if self.r0 and self.r1 else None
        if self.r0 and self.r1:
            if not pm.is_scalar_identity(a, W) or not pm.is_scalar_identity(b, W):
                raise MFError("d^2 != W * 1")
        elif W and self.rank:
            raise MFError("a factorisation with one empty side needs W = 0")
        if self.grading is not None:
            bad = grading_violation(self)
            if bad is not None:
                raise MFError(f"grading inconsistent at entry {bad}")
        return True

    def is_valid(self) -> bool:
        try:
            return self.check()
        except MFError:
            return False

    def copy_with(self, **kw) -> "MF":
        args = dict(ring=self.ring, potential=self.potential, d0=self.d0, d1=self.d1, r0=self.r0,
                    r1=self.r1, grading=self.grading, target_vars=self.target_vars,
                    source_vars=self.source_vars, check=False, name=self.name)
        args.update(kw)
        return MF(**args)

    def with_ring(self, ring: RingSpec) -> "MF":
        return self.copy_with(ring=ring, potential=embed(self.potential, ring),
                              d0=pm.embed_matrix(self.d0, ring), d1=pm.embed_matrix(self.d1, ring))

    def renamed(self, mapping: Mapping[str, str], ring: RingSpec | None = None) -> "MF":
        """Rename variables (e.g. to move a defect onto other variable copies)."""
        if ring is None:
            names = tuple(mapping.get(v, v) for v in self.ring.variables)
            ring = RingSpec(names, self.ring.degrees, self.ring.field)
        f = lambda p: rename(p, mapping, ring)
        tv = None if self.target_vars is None else tuple(mapping.get(v, v) for v in self.target_vars)
        sv = None if self.source_vars is None else tuple(mapping.get(v, v) for v in self.source_vars)
        return self.copy_with(ring=ring, potential=f(self.potential), d0=pm.apply(self.d0, f),
                              d1=pm.apply(self.d1, f), target_vars=tv, source_vars=sv)

    def is_defect(self) -> bool:
        return self.target_vars is not None and self.source_vars is not None

    def internal_vars(self) -> tuple[str, ...]:
        outer = set(self.target_vars or ()) | set(self.source_vars or ())
        return tuple(v for v in self.ring.variables if v not in outer)

    def __eq__(self, other):
        if not isinstance(other, MF):
            return NotImplemented
        return (self.ring.variables == other.ring.variables and self.ranks == other.ranks
                and self.potential == other.potential and pm.equal(self.d0, other.d0)
                and pm.equal(self.d1, other.d1))

    def __hash__(self):
        return hash((self.ring.variables, self.ranks))

    def __repr__(self):
        return f"MF(ranks={self.ranks}, W={self.potential}, ring={self.ring})"

    # convenience -------------------------------------------------------
    def derivative(self, var: str) -> pm.Matrix:
        return pm.apply(self.D, lambda p: partial_derivative(p, var))

    def identity(self) -> "Morphism":
        return Morphism(self, self, pm.identity(self.ring, self.rank), 0)

    def zero_morphism(self, target: "MF" | None = None, parity: int = 0) -> "Morphism":
        target = target or self
        return Morphism(self, target, pm.zeros(target.ring, target.rank, self.rank), parity)


def _fix(p, ring):
    if not isinstance(p, Poly):
        return ring.const(p)
    if p.ring.variables != ring.variables:
        return embed(p, ring)
    if p.ring is not ring:
        return Poly(ring, p.terms)
    return p


# ---------------------------------------------------------------------------
# gradings


def grading_violation(X: MF):
    """First entry of d that is not homogeneous of degree 1, or None."""
    g = X.grading
    D = X.D
    for i in range(X.rank):
        for j in range(X.rank):
            p = D[i][j]
            if p:
                need = g[i] - g[j] + 1
                for m in p.terms:
                    if X.ring.mono_weight(m) != need:
                        return (i, j)
    return None


def infer_grading(X: MF):
    """Generator degrees making d homogeneous of degree 1, or None if impossible.

    Each connected block of the differential gets its first generator at 0.
    """
    if not X.ring.graded:
        return None
    n = X.rank
    D = X.D
    adj = [[] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            p = D[i][j]
            if p:
                degs = p.weighted_degrees()
                if len(degs) != 1:
                    return None
                w = degs.pop()
                # entry (i, j) has weight deg_i - deg_j + 1
                adj[j].append((i, w - 1))
                adj[i].append((j, 1 - w))
    deg = [None] * n
    for start in range(n):
        if deg[start] is not None:
            continue
        deg[start] = Fraction(0)
        stack = [start]
        while stack:
            a = stack.pop()
            for b, delta in adj[a]:
                val = deg[a] + delta
                if deg[b] is None:
                    deg[b] = val
                    stack.append(b)
                elif deg[b] != val:
                    return None
    return tuple(deg)


def with_grading(X: MF, required: bool = False) -> MF:
    if X.grading is not None:
        return X
    g = infer_grading(X)
    if g is None:
        if required:
            raise MFError("factorisation is not quasi-homogeneous")
        return X
    return X.copy_with(grading=g)


def infer_weights(W: Poly):
    """Positive weights making W homogeneous of degree 2, if unique; else None."""
    from .linalg import solve_dense

    ring = W.ring
    n = ring.n
    if not W or n == 0:
        return None
    rows, rhs = [], []
    for e in W.exponent_dict():
        rows.append([Fraction(x) for x in e])
        rhs.append(Fraction(2))
    sol = solve_dense(rows, rhs, unique=True)
    if sol is None or any(s <= 0 for s in sol):
        return None
    return tuple(sol)


def graded_ring_for(W: Poly) -> RingSpec:
    w = infer_weights(W)
    if w is None:
        raise MFError(f"{W} is not quasi-homogeneous with unique positive weights")
    return RingSpec(W.ring.variables, w, W.ring.field)


# ---------------------------------------------------------------------------
# morphisms


class Morphism:
    """A homogeneous-parity map between factorisations.

    ``matrix`` has one row per target basis vector and one column per source
    basis vector, with entries in the target ring.  ``subst`` (optional)
    sends each variable of the source ring to a polynomial of the target
    ring; the map is then semilinear: F(p v) = subst(p) F(v).  Without
    ``subst`` the source ring variables must all occur in the target ring.
    """

    def __init__(self, source: MF, target: MF, matrix, parity: int = 0,
                 subst: Mapping[str, Poly] | None = None):
        self.source = source
        self.target = target
        self.parity = parity % 2
        ring = target.ring
        self.matrix = [[_fix(p, ring) for p in row] for row in matrix]
        if len(self.matrix) != target.rank or any(len(r) != source.rank for r in self.matrix):
            raise MFError(f"morphism matrix must be {target.rank}x{source.rank}")
        for i in range(target.rank):
            for j in range(source.rank):
                if self.matrix[i][j] and (target.parity(i) + source.parity(j)) % 2 != self.parity:
                    raise MFError(f"entry ({i},{j}) violates parity {self.parity}")
        self.subst = None if subst is None else {k: _fix(v, ring) for k, v in subst.items()}

    @property
    def ring(self) -> RingSpec:
        return self.target.ring

    def sigma(self, p: Poly) -> Poly:
        """Apply the coefficient map to a polynomial of the source ring."""
        if self.subst is None:
            return embed(p, self.ring)
        return substitute(p, self.subst, self.ring)

    def sigma_matrix(self, A: pm.Matrix) -> pm.Matrix:
        cache: dict = {}

        def f(p):
            if not p:
                return self.ring.zero()
            key = frozenset(p.terms.items())
            hit = cache.get(key)
            if hit is None:
                hit = self.sigma(p)
                cache[key] = hit
            return hit

        return pm.apply(A, f)

    def full_subst(self) -> dict:
        if self.subst is None:
            return {v: self.ring.gen(v) for v in self.source.ring.variables}
        out = {}
        for v in self.source.ring.variables:
            out[v] = self.subst[v] if v in self.subst else embed(self.source.ring.gen(v), self.ring)
        return out

    def is_semilinear(self) -> bool:
        if self.subst is None:
            return False
        return any(self.subst[v] != self.ring.gen(v) if v in self.ring.variables else True
                   for v in self.subst)

    # algebra -----------------------------------------------------------
    def compose(self, other: "Morphism") -> "Morphism":
        """self o other (other first)."""
        if other.target.rank != self.source.rank:
            raise MFError("composition shape mismatch")
        M = pm.matmul(self.matrix, self.sigma_matrix(other.matrix), self.ring)
        sub = None
        if self.subst is not None or other.subst is not None:
            inner = other.full_subst()
            sub = {v: self.sigma(p) for v, p in inner.items()}
        return Morphism(other.source, self.target, M, self.parity + other.parity, sub)

    def __matmul__(self, other):
        return self.compose(other)

    def _same_shape(self, other):
        if other.source.rank != self.source.rank or other.target.rank != self.target.rank:
            raise MFError("morphisms have different shapes")

    def __add__(self, other: "Morphism") -> "Morphism":
        self._same_shape(other)
        self._check_subst(other)
        return Morphism(self.source, self.target, pm.add(self.matrix, other.matrix), self.parity, self.subst)

    def __sub__(self, other: "Morphism") -> "Morphism":
        self._same_shape(other)
        self._check_subst(other)
        return Morphism(self.source, self.target, pm.sub(self.matrix, other.matrix), self.parity, self.subst)

    def __neg__(self):
        return Morphism(self.source, self.target, pm.neg(self.matrix), self.parity, self.subst)

    def scale(self, c) -> "Morphism":
        if isinstance(c, Poly):
            return Morphism(self.source, self.target, [[a * c for a in r] for r in self.matrix],
                            self.parity, self.subst)
        return Morphism(self.source, self.target, pm.scale(self.matrix, c), self.parity, self.subst)

    def _check_subst(self, other):
        if not self.same_coefficient_map(other):
            raise MFError("cannot add semilinear maps with different coefficient maps")

    def same_coefficient_map(self, other: "Morphism") -> bool:
        a, b = self.full_subst(), other.full_subst()
        return a.keys() == b.keys() and all(a[k] == b[k] for k in a)

    def equals(self, other: "Morphism") -> bool:
        """Equality of maps: matrices agree and, unless the map is zero,
        the coefficient maps agree too."""
        if not pm.equal(self.matrix, other.matrix):
            return False
        if pm.is_zero(self.matrix):
            return True
        return self.same_coefficient_map(other)

    def difference_location(self, other: "Morphism"):
        loc = pm.first_difference(self.matrix, other.matrix)
        if loc is not None:
            return ("entry", loc)
        if not pm.is_zero(self.matrix) and not self.same_coefficient_map(other):
            a, b = self.full_subst(), other.full_subst()
            for k in a:
                if a[k] != b.get(k):
                    return ("variable", k)
        return None

    def chain_defect(self) -> pm.Matrix:
        """d_Y F - (-1)^|F| F sigma(d_X); zero iff F is a chain map."""
        left = pm.matmul(self.target.D, self.matrix, self.ring)
        right = pm.matmul(self.matrix, self.sigma_matrix(self.source.D), self.ring)
        if self.parity:
            return pm.add(left, right)
        return pm.sub(left, right)

    def is_chain_map(self) -> bool:
        return pm.is_zero(self.chain_defect())

    def blocks(self):
        """(even->even, odd->even, even->odd, odd->odd) sub-blocks."""
        s0, s1 = self.source.r0, self.source.r1
        t0, t1 = self.target.r0, self.target.r1
        M = self.matrix
        return (pm.submatrix(M, range(t0), range(s0)), pm.submatrix(M, range(t0), range(s0, s0 + s1)),
                pm.submatrix(M, range(t0, t0 + t1), range(s0)),
                pm.submatrix(M, range(t0, t0 + t1), range(s0, s0 + s1)))

    def __repr__(self):
        return f"Morphism({self.source.ranks}->{self.target.ranks}, parity={self.parity})"


def hom_differential(phi: Morphism) -> Morphism:
    """delta(phi) = d_Y phi - (-1)^|phi| phi d_X (linear maps only)."""
    return Morphism(phi.source, phi.target, phi.chain_defect(), phi.parity + 1, phi.subst)


# ---------------------------------------------------------------------------
# constructors


def _ring_of(polys):
    for p in polys:
        if isinstance(p, Poly):
            return p.ring
    raise MFError("cannot infer ring")


def koszul(pairs: Sequence[tuple[Poly, Poly]], ring: RingSpec | None = None,
           target_vars=None, source_vars=None, grading=None) -> MF:
    """Tensor product of the rank (1|1) factorisations ((0, a), (b, 0))."""
    if ring is None:
        ring = _ring_of([p for ab in pairs for p in ab])
    X = unit_mf(ring)
    for a, b in pairs:
        a = _fix(a, ring)
        b = _fix(b, ring)
        K = MF(ring, a * b, [[b]], [[a]], 1, 1, check=False)
        X = tensor(X, K, check=False)
    X = X.copy_with(target_vars=target_vars if target_vars is not None else tuple(ring.variables),
                    source_vars=source_vars if source_vars is not None else ())
    X.check()
    if grading is not None:
        X = X.copy_with(grading=grading)
        X.check()
    elif ring.graded:
        X = with_grading(X)
    return X


def unit_mf(ring: RingSpec) -> MF:
    """The rank (1|0) factorisation of 0."""
    return MF(ring, ring.zero(), [], [[]], 1, 0, grading=(0,) if ring.graded else None)


def trivial_mf(W: Poly, unit_first: bool = True) -> MF:
    """The contractible factorisation ((0, 1), (W, 0))."""
    ring = W.ring
    if unit_first:
        return MF(ring, W, [[W]], [[ring.one()]], 1, 1)
    return MF(ring, W, [[ring.one()]], [[W]], 1, 1)


def theta_basis(n: int) -> list[tuple[int, ...]]:
    """Subsets ordered by (size, lexicographic), even sizes first."""
    subsets = []
    for k in range(n + 1):
        subsets.extend(itertools.combinations(range(n), k))
    even = [s for s in subsets if len(s) % 2 == 0]
    odd = [s for s in subsets if len(s) % 2 == 1]
    return even + odd


def _wedge_sign(S, i):
    return -1 if sum(1 for s in S if s < i) % 2 else 1


def identity_defect(W: Poly, target_names: Sequence[str] | None = None,
                    source_names: Sequence[str] | None = None, ring: RingSpec | None = None) -> MF:
    """The unit defect I_W, a factorisation of W(x) - W(x') over k[x, x']."""
    base = W.ring
    names = base.variables
    if target_names is None:
        target_names = names
    if source_names is None:
        source_names = tuple(prime_name(v) for v in target_names)
    target_names = tuple(target_names)
    source_names = tuple(source_names)
    if ring is None:
        degs = None if base.degrees is None else tuple(base.degrees) * 2
        ring = RingSpec(target_names + source_names, degs, base.field)
    n = len(names)
    Wt = rename(W, dict(zip(names, target_names)), ring)
    Ws = rename(W, dict(zip(names, source_names)), ring)
    basis = theta_basis(n)
    index = {S: k for k, S in enumerate(basis)}
    r0 = sum(1 for S in basis if len(S) % 2 == 0)
    r1 = len(basis) - r0
    D = pm.zeros(ring, len(basis), len(basis))
    primed = dict(zip(target_names, source_names))
    Wt_only = rename(W, dict(zip(names, target_names)), RingSpec(target_names, None, base.field))
    for i in range(n):
        dd = divided_difference(Wt_only, i, target=ring, primed=primed)
        lin = ring.gen(target_names[i]) - ring.gen(source_names[i])
        for S in basis:
            col = index[S]
            if i in S:
                T = tuple(s for s in S if s != i)
                D[index[T]][col] = D[index[T]][col] + lin.scale(_wedge_sign(S, i))
            else:
                T = tuple(sorted(S + (i,)))
                D[index[T]][col] = D[index[T]][col] + dd.scale(_wedge_sign(S, i))
    X = MF.from_full(ring, Wt - Ws, D, r0, r1, target_vars=target_names, source_vars=source_names,
                     check=True, name=f"I[{W}]")
    if ring.graded:
        X = with_grading(X)
    return X


def dual(X: MF) -> MF:
    """X^v = Hom(X, R): d0^v = -(d1)^T, d1^v = (d0)^T, potential -W."""
    d0 = _transpose_shape(X.d1, X.r0, X.r1, negate=True)
    d1 = _transpose_shape(X.d0, X.r1, X.r0, negate=False)
    grading = None if X.grading is None else tuple(-g for g in X.grading)
    return MF(X.ring, -X.potential, d0, d1, X.r0, X.r1, grading=grading,
              target_vars=X.source_vars, source_vars=X.target_vars, check=True)


def _transpose_shape(A, rows, cols, negate):
    # A is rows x cols; return cols x rows
    out = []
    for j in range(cols):
        out.append([(-A[i][j] if negate else A[i][j]) for i in range(rows)])
    return out


def shift(X: MF, times: int = 1) -> MF:
    """X[1]: swap even and odd parts and negate the differential."""
    Y = X
    for _ in range(times % 2):
        grading = None if Y.grading is None else Y.grading[Y.r0:] + Y.grading[:Y.r0]
        Y = MF(Y.ring, Y.potential, pm.neg(Y.d1), pm.neg(Y.d0), Y.r1, Y.r0, grading=grading,
               target_vars=Y.target_vars, source_vars=Y.source_vars, check=False)
    return Y


def parity_swap(X: MF, times: int = 1) -> MF:
    """Swap even and odd parts without changing the sign of d."""
    Y = X
    for _ in range(times % 2):
        grading = None if Y.grading is None else Y.grading[Y.r0:] + Y.grading[:Y.r0]
        Y = MF(Y.ring, Y.potential, Y.d1, Y.d0, Y.r1, Y.r0, grading=grading,
               target_vars=Y.target_vars, source_vars=Y.source_vars, check=False)
    return Y


def adjoints(X: MF) -> tuple[MF, MF]:
    """(left adjoint, right adjoint) of a defect with declared split.

    With m target and n source variables the right adjoint is R[n] (x) X^v,
    i.e. n shifts of the dual, and the left adjoint is X^v (x) S[m], i.e. the
    dual with its parity swapped m times (a unit shifted on the right does
    not change the sign of d).
    """
    if not X.is_defect():
        raise MFError("adjoints need a declared source/target variable split")
    m = len(X.target_vars)
    n = len(X.source_vars)
    Xd = dual(X)
    right = shift(Xd, n)
    left = parity_swap(Xd, m)
    return left, right


def right_adjoint(X: MF) -> MF:
    return adjoints(X)[1]


def left_adjoint(X: MF) -> MF:
    return adjoints(X)[0]


def tensor_basis(Y: MF, X: MF) -> list[tuple[int, int]]:
    """Pairs (i, j) of Y- and X-basis indices in the order used by tensor(Y, X)."""
    Y0, Y1 = range(Y.r0), range(Y.r0, Y.rank)
    X0, X1 = range(X.r0), range(X.r0, X.rank)
    even = [(i, j) for i in Y0 for j in X0] + [(i, j) for i in Y1 for j in X1]
    odd = [(i, j) for i in Y0 for j in X1] + [(i, j) for i in Y1 for j in X0]
    return even + odd


def tensor(Y: MF, X: MF, ring: RingSpec | None = None, check: bool = True) -> MF:
    """Y (x) X over the union of the two rings (shared variables identified)."""
    if ring is None:
        ring = Y.ring.union(X.ring)
    DY = pm.embed_matrix(Y.D, ring) if Y.ring.variables != ring.variables else Y.D
    DX = pm.embed_matrix(X.D, ring) if X.ring.variables != ring.variables else X.D
    basis = tensor_basis(Y, X)
    index = {b: k for k, b in enumerate(basis)}
    N = len(basis)
    D = pm.zeros(ring, N, N)
    for col, (i, j) in enumerate(basis):
        for k in range(Y.rank):
            p = DY[k][i]
            if p:
                D[index[(k, j)]][col] = D[index[(k, j)]][col] + p
        sgn = -1 if Y.parity(i) else 1
        for l in range(X.rank):
            p = DX[l][j]
            if p:
                D[index[(i, l)]][col] = D[index[(i, l)]][col] + (p if sgn > 0 else -p)
    r0 = Y.r0 * X.r0 + Y.r1 * X.r1
    r1 = Y.r0 * X.r1 + Y.r1 * X.r0
    W = embed(Y.potential, ring) + embed(X.potential, ring)
    grading = None
    if Y.grading is not None and X.grading is not None:
        grading = tuple(Y.grading[i] + X.grading[j] for i, j in basis)
    tv = Y.target_vars
    sv = X.source_vars
    return MF.from_full(ring, W, D, r0, r1, grading=grading, target_vars=tv, source_vars=sv, check=check)


def external_product(X: MF, Y: MF) -> MF:
    """X (x)_k Y for factorisations in disjoint variables."""
    common = set(X.ring.variables) & set(Y.ring.variables)
    if common:
        raise MFError(f"variable-name collision: {sorted(common)}")
    Z = tensor(X, Y)
    tv = tuple(X.target_vars or ()) + tuple(Y.target_vars or ())
    sv = tuple(X.source_vars or ()) + tuple(Y.source_vars or ())
    return Z.copy_with(target_vars=tv, source_vars=sv)


def direct_sum(*mfs: MF) -> MF:
    ring = mfs[0].ring
    r0 = sum(X.r0 for X in mfs)
    r1 = sum(X.r1 for X in mfs)
    d0 = pm.zeros(ring, r1, r0)
    d1 = pm.zeros(ring, r0, r1)
    o0 = o1 = 0
    for X in mfs:
        if X.ring.variables != ring.variables:
            raise MFError("direct sum needs a common ring")
        for i in range(X.r1):
            for j in range(X.r0):
                d0[o1 + i][o0 + j] = X.d0[i][j]
        for i in range(X.r0):
            for j in range(X.r1):
                d1[o0 + i][o1 + j] = X.d1[i][j]
        o0 += X.r0
        o1 += X.r1
    grading = None
    if all(X.grading is not None for X in mfs):
        ev = [g for X in mfs for g in X.grading[:X.r0]]
        od = [g for X in mfs for g in X.grading[X.r0:]]
        grading = tuple(ev + od)
    return MF(ring, mfs[0].potential, d0, d1, r0, r1, grading=grading,
              target_vars=mfs[0].target_vars, source_vars=mfs[0].source_vars)


def direct_sum_basis(mfs: Sequence[MF]) -> list[tuple[int, int]]:
    """(summand, index) for each basis vector of direct_sum(*mfs)."""
    even = [(k, i) for k, X in enumerate(mfs) for i in range(X.r0)]
    odd = [(k, i) for k, X in enumerate(mfs) for i in range(X.r0, X.rank)]
    return even + odd


def supertrace(phi: pm.Matrix, r0: int, r1: int, ring: RingSpec, parity: int = 0) -> Poly:
    if len(phi) != r0 + r1 or any(len(r) != r0 + r1 for r in phi):
        raise MFError("supertrace needs an (r0+r1) square matrix")
    if parity % 2:
        return ring.zero()
    acc = ring.zero()
    for i in range(r0):
        acc = acc + phi[i][i]
    for i in range(r0, r0 + r1):
        acc = acc - phi[i][i]
    return acc


def tensor_morphism(F: Morphism, G: Morphism, source: MF | None = None, target: MF | None = None) -> Morphism:
    """F (x) G with (F (x) G)(y x) = (-1)^{|G||y|} F(y) (x) G(x).

    Coefficient maps of F and G are merged; they must agree on shared variables.
    """
    Ys, Xs = F.source, G.source
    Yt, Xt = F.target, G.target
    if source is None:
        source = tensor(Ys, Xs, check=False)
    if target is None:
        target = tensor(Yt, Xt, check=False)
    ring = target.ring
    sb = tensor_basis(Ys, Xs)
    tb = tensor_basis(Yt, Xt)
    tindex = {b: k for k, b in enumerate(tb)}
    FM = pm.embed_matrix(F.matrix, ring)
    GM = pm.embed_matrix(G.matrix, ring)
    M = pm.zeros(ring, target.rank, source.rank)
    for col, (i, j) in enumerate(sb):
        sgn = -1 if (G.parity and Ys.parity(i)) else 1
        for k in range(Yt.rank):
            a = FM[k][i]
            if not a:
                continue
            for l in range(Xt.rank):
                b = GM[l][j]
                if b:
                    row = tindex[(k, l)]
                    t = a * b
                    M[row][col] = M[row][col] + (t if sgn > 0 else -t)
    subst = None
    if F.subst is not None or G.subst is not None:
        subst = {}
        fs = {k: embed(v, ring) for k, v in F.full_subst().items()}
        gs = {k: embed(v, ring) for k, v in G.full_subst().items()}
        for k in set(fs) | set(gs):
            if k in fs and k in gs and fs[k] != gs[k]:
                raise MFError(f"coefficient maps disagree on {k}")
            subst[k] = fs.get(k, gs.get(k))
        for v in source.ring.variables:
            if v not in subst:
                subst[v] = ring.gen(v)
    return Morphism(source, target, M, F.parity + G.parity, subst)


def identity_morphism(X: MF) -> Morphism:
    return X.identity()


# ---------------------------------------------------------------------------
# group actions


@dataclass(frozen=True)
class GroupElement:
    """Linear substitution x_i -> sum_j M_ij x_j on named variables."""

    variables: tuple
    matrix: tuple  # tuple of tuples of scalars
    label: str = ""

    def images(self, ring: RingSpec, names: Sequence[str] | None = None) -> dict:
        names = tuple(names) if names is not None else self.variables
        out = {}
        for i, v in enumerate(names):
            acc = ring.zero()
            for j, w in enumerate(names):
                c = self.matrix[i][j]
                if c:
                    acc = acc + ring.gen(w).scale(c)
            out[v] = acc
        return out

    def act(self, p: Poly, names: Sequence[str] | None = None) -> Poly:
        """p(M x) on the given variable names (default: the element's own)."""
        return substitute(p, self.images(p.ring, names), p.ring)

    def det(self):
        from .linalg import det_scalar
        return det_scalar([list(r) for r in self.matrix])

    def is_identity(self) -> bool:
        n = len(self.variables)
        return all(self.matrix[i][j] == (1 if i == j else 0) for i in range(n) for j in range(n))


def compose_elements(g: GroupElement, h: GroupElement) -> GroupElement:
    """g*h (apply h first to polynomials, then g): M_{gh} = M_h M_g."""
    n = len(g.variables)
    M = tuple(tuple(sum((h.matrix[i][k] * g.matrix[k][j] for k in range(n)), 0) for j in range(n))
              for i in range(n))
    return GroupElement(g.variables, M)


@dataclass
class GroupAction:
    """A finite group of linear automorphisms given by its elements."""

    variables: tuple
    elements: list
    table: list = field(default_factory=list)
    identity_index: int = 0

    def __post_init__(self):
        self.variables = tuple(self.variables)
        if not self.table:
            self.table = self._compute_table()
        ids = [k for k, g in enumerate(self.elements) if g.is_identity()]
        if len(ids) != 1:
            raise MFError("group must contain the identity exactly once")
        self.identity_index = ids[0]
        self._check_group()

    def _find(self, M):
        for k, g in enumerate(self.elements):
            if g.matrix == M:
                return k
        return None

    def _compute_table(self):
        table = []
        for g in self.elements:
            row = []
            for h in self.elements:
                k = self._find(compose_elements(g, h).matrix)
                if k is None:
                    raise MFError("elements are not closed under composition")
                row.append(k)
            table.append(row)
        return table

    def _check_group(self):
        n = len(self.elements)
        e = self.identity_index
        for a in range(n):
            if sorted(self.table[a]) != list(range(n)):
                raise MFError("multiplication table is not a Latin square")
            for b in range(n):
                for c in range(n):
                    if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                        raise MFError("multiplication is not associative")
            if self.table[e][a] != a:
                raise MFError("identity does not act trivially")

    @property
    def order(self) -> int:
        return len(self.elements)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inverse(self, a: int) -> int:
        for b in range(self.order):
            if self.table[a][b] == self.identity_index:
                return b
        raise MFError("no inverse")

    def preserves(self, W: Poly) -> bool:
        return all(g.act(W) == W for g in self.elements)

    @staticmethod
    def cyclic(variables: Sequence[str], generator: Sequence[Sequence]) -> "GroupAction":
        variables = tuple(variables)
        g = GroupElement(variables, tuple(tuple(r) for r in generator))
        elems = [GroupElement(variables, tuple(tuple(1 if i == j else 0 for j in range(len(variables)))
                                              for i in range(len(variables))))]
        cur = g
        while not cur.is_identity():
            elems.append(cur)
            cur = compose_elements(cur, g)
            if len(elems) > 1000:
                raise MFError("generator does not have finite order")
        return GroupAction(variables, elems)

    @staticmethod
    def trivial(variables: Sequence[str]) -> "GroupAction":
        n = len(variables)
        e = GroupElement(tuple(variables), tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))
        return GroupAction(tuple(variables), [e])


def twist(g: GroupElement, X: MF, on: Sequence[str] | None = None) -> MF:
    """gX: entries p replaced by p(M x) on the twisted variables ``on``.

    ``on`` defaults to the target variables of X (the left action); it must
    list as many names as the element has variables.
    """
    on = tuple(on) if on is not None else tuple(X.target_vars or X.ring.variables)
    if len(on) != len(g.variables):
        raise MFError("group element and twisted variables differ in number")
    if g.is_identity():
        return X.copy_with()
    imgs = g.images(X.ring, on)
    f = lambda p: substitute(p, imgs, X.ring) if p else p
    Wt = f(X.potential)
    return X.copy_with(potential=Wt, d0=pm.apply(X.d0, f), d1=pm.apply(X.d1, f), check=True)


def twist_matrix(g: GroupElement, A: pm.Matrix, ring: RingSpec, on: Sequence[str]) -> pm.Matrix:
    imgs = g.images(ring, on)
    return pm.apply(A, lambda p: substitute(p, imgs, ring) if p else p)


def twist_morphism(g: GroupElement, F: Morphism, source: MF, target: MF, on: Sequence[str]) -> Morphism:
    """g(F): the same map viewed between the twisted modules.

    For F = (sigma, M) the twisted map has matrix g(M) and coefficient map
    g o sigma on the non-twisted source variables.
    """
    ring = target.ring
    imgs = g.images(ring, on)
    M = pm.apply(F.matrix, lambda p: substitute(p, imgs, ring) if p else p)
    subst = None
    if F.subst is not None:
        subst = {}
        for v, p in F.full_subst().items():
            if v in on:
                subst[v] = ring.gen(v)
            else:
                subst[v] = substitute(p, imgs, ring)
    return Morphism(source, target, M, F.parity, subst)
