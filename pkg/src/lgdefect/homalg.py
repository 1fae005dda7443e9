"""Hom complexes, null-homotopies, minimal models and idempotent splitting.

For factorisations X, Y of the same potential the morphism spaces form a
Z/2-graded complex with differential D(f) = d_Y f - (-1)^|f| f d_X.

Graded route.  When the ring carries weights and X, Y carry generator
degrees, a morphism entry (i, j) of degree delta has weight
Y.grading[i] - X.grading[j] + delta, so each (parity, delta) piece is a
finite-dimensional vector space and cohomology is plain linear algebra.
Multiplication by each dW/dx_i is null-homotopic and regular on the
complex, so H(C) embeds into H(C / (dW) C); hence only degrees in which
C / (dW) C is nonzero can carry cohomology.  That gives a finite, certified
window of degrees.

Ungraded route.  Kernels and images are computed as modules over R via
syzygies, and dim_k(ker / im) is read off a module Groebner basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

from . import pmatrix as pm
from .groebner import module_quotient_dimension, solve_linear_over_ring, syzygies
from .linalg import Echelon, kernel, solve_columns
from .mf import MF, Morphism, hom_differential, infer_grading, infer_weights
from .poly import BITS, Poly, RingSpec, embed, homogeneity, pack
from .scalar import invert


class HomologyError(ValueError):
    """A homological computation could not be carried out."""


# ---------------------------------------------------------------------------
# graded monomials


@lru_cache(maxsize=None)
def _monomials_of_weight(degrees: tuple, w: Fraction) -> tuple:
    n = len(degrees)
    if w < 0:
        return ()
    if n == 0:
        return (0,) if w == 0 else ()
    out = []

    def rec(i, rest, mono):
        if i == n - 1:
            q = rest / degrees[i]
            if q.denominator == 1:
                out.append(mono | (int(q) << (BITS * i)))
            return
        e = 0
        while e * degrees[i] <= rest:
            rec(i + 1, rest - e * degrees[i], mono | (e << (BITS * i)))
            e += 1

    rec(0, w, 0)
    return tuple(out)


def monomials_of_weight(ring: RingSpec, w) -> tuple:
    """Packed monomials of the graded ring with weighted degree exactly w."""
    return _monomials_of_weight(tuple(ring.degrees), Fraction(w))


@lru_cache(maxsize=None)
def _weights_up_to(degrees: tuple, bound: Fraction) -> tuple:
    seen = {Fraction(0)}
    frontier = [Fraction(0)]
    while frontier:
        nxt = []
        for w in frontier:
            for d in degrees:
                v = w + d
                if v <= bound and v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return tuple(sorted(seen))


# ---------------------------------------------------------------------------
# preparing graded data


def _is_linear(F: Morphism) -> bool:
    if F.subst is None:
        return True
    ring = F.ring
    for v, p in F.subst.items():
        if v not in ring.variables or p != ring.gen(v):
            return False
    return True


def linearised(F: Morphism) -> Morphism:
    """Drop a coefficient map that is the identity on every variable."""
    if F.subst is None:
        return F
    if not _is_linear(F):
        raise HomologyError("morphism is genuinely semilinear")
    return Morphism(F.source, F.target, F.matrix, F.parity)


def graded_version(X: MF, ring: RingSpec | None = None) -> MF | None:
    """X over a graded ring with inferred generator degrees, or None."""
    if ring is None:
        ring = X.ring
        if not ring.graded:
            w = infer_weights(X.potential) if X.potential else None
            if w is None or len(w) != ring.n:
                return None
            ring = RingSpec(ring.variables, w, ring.field)
    W = X.potential
    if W:
        w = homogeneity(embed(W, ring))
        if w is None:
            return None
        if w != 2:
            ring = RingSpec(ring.variables, tuple(d * 2 / w for d in ring.degrees), ring.field)
    Xg = X if X.ring == ring else X.with_ring(ring).copy_with(grading=None)
    if Xg.grading is None:
        g = infer_grading(Xg)
        if g is None:
            return None
        Xg = Xg.copy_with(grading=g)
    return Xg


def _common_ring(X: MF, Y: MF) -> RingSpec:
    if X.ring.variables != Y.ring.variables:
        raise HomologyError(f"factorisations live over different rings: {X.ring} vs {Y.ring}")
    if X.ring.graded:
        return X.ring
    if Y.ring.graded:
        return Y.ring
    return X.ring


def _socle_degree(W: Poly) -> Fraction:
    from .residue import jacobi_ring
    J = jacobi_ring(W)
    ring = W.ring
    if ring.n == 0:
        return Fraction(0)
    return max(ring.mono_weight(pack(e)) for e in J.basis)


# ---------------------------------------------------------------------------
# graded hom complex


class HomComplex:
    """Morphisms X -> Y over a common graded ring, split by parity and degree."""

    def __init__(self, X: MF, Y: MF, check_potentials: bool = True):
        ring = _common_ring(X, Y)
        Xg = graded_version(X, ring if ring.graded else None)
        Yg = graded_version(Y, Xg.ring if Xg is not None else None)
        if Xg is None or Yg is None:
            raise HomologyError("no compatible grading: use the syzygy route")
        if check_potentials and Xg.potential != embed(Yg.potential, Xg.ring):
            raise HomologyError("source and target have different potentials")
        self.X, self.Y = Xg, Yg
        self.ring = Xg.ring
        self.a = Xg.grading
        self.b = Yg.grading
        self._spaces: dict = {}
        self._dcols: dict = {}
        self._coh: dict = {}
        self._dX_rows = [[(l, p) for l, p in enumerate(row) if p] for row in Xg.D]
        DY = Yg.D
        self._dY_cols = [[(k, DY[k][i]) for k in range(Yg.rank) if DY[k][i]] for i in range(Yg.rank)]

    # spaces ------------------------------------------------------------
    def positions(self, p: int):
        return [(i, j) for i in range(self.Y.rank) for j in range(self.X.rank)
                if (self.Y.parity(i) + self.X.parity(j)) % 2 == p % 2]

    def weight(self, i, j, delta) -> Fraction:
        return self.b[i] - self.a[j] + delta

    def space(self, p: int, delta) -> tuple[list, dict]:
        key = (p % 2, Fraction(delta))
        hit = self._spaces.get(key)
        if hit is None:
            keys = []
            for i, j in self.positions(p):
                for m in monomials_of_weight(self.ring, self.weight(i, j, key[1])):
                    keys.append((i, j, m))
            hit = (keys, {k: n for n, k in enumerate(keys)})
            self._spaces[key] = hit
        return hit

    def apply_d(self, p: int, i: int, j: int, m: int) -> dict:
        """D(m E_ij) as a dict (row, col, mono) -> coefficient."""
        out: dict = {}
        for k, q in self._dY_cols[i]:
            for t, c in q.terms.items():
                key = (k, j, m + t)
                v = out.get(key, 0) + c
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
        sgn = 1 if p % 2 else -1  # -(-1)^p
        for l, q in self._dX_rows[j]:
            for t, c in q.terms.items():
                key = (i, l, m + t)
                v = out.get(key, 0) + sgn * c
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
        return out

    def d_columns(self, p: int, delta) -> list[dict]:
        key = (p % 2, Fraction(delta))
        hit = self._dcols.get(key)
        if hit is None:
            keys, _ = self.space(p, delta)
            _, tindex = self.space(p + 1, key[1] + 1)
            hit = []
            for (i, j, m) in keys:
                img = self.apply_d(p, i, j, m)
                hit.append({tindex[k]: c for k, c in img.items()})
            self._dcols[key] = hit
        return hit

    # window --------------------------------------------------------------
    def degree_window(self) -> list[Fraction]:
        """Degrees that can carry cohomology."""
        soc = _socle_degree(self.X.potential)
        ws = _weights_up_to(tuple(self.ring.degrees), soc) if self.ring.n else (Fraction(0),)
        out = set()
        for p in (0, 1):
            for i, j in self.positions(p):
                base = self.a[j] - self.b[i]
                for w in ws:
                    out.add(base + w)
        return sorted(out)

    # cohomology ------------------------------------------------------------
    def _cohomology(self, p: int, delta):
        key = (p % 2, Fraction(delta))
        hit = self._coh.get(key)
        if hit is not None:
            return hit
        keys, _ = self.space(p, delta)
        ech = Echelon(track=True)
        for col in self.d_columns(p + 1, key[1] - 1):
            ech.add(col)
        n_image = ech.rank
        reps = []
        for vec in kernel(self.d_columns(p, delta)):
            r, _ = ech.add(vec, {len(reps): 1})
            if r is not None:
                reps.append(vec)
        hit = (reps, ech, n_image)
        self._coh[key] = hit
        return hit

    def cohomology_dimension(self, p: int, delta) -> int:
        keys, _ = self.space(p, delta)
        if not keys:
            return 0
        return len(self._cohomology(p, delta)[0])

    def dimensions(self) -> tuple[int, int]:
        dims = [0, 0]
        for delta in self.degree_window():
            for p in (0, 1):
                dims[p] += self.cohomology_dimension(p, delta)
        return dims[0], dims[1]

    def profile(self) -> dict:
        """{(parity, degree): dimension} over the window, nonzero entries only."""
        out = {}
        for delta in self.degree_window():
            for p in (0, 1):
                d = self.cohomology_dimension(p, delta)
                if d:
                    out[(p, delta)] = d
        return out

    # conversions --------------------------------------------------------------
    def to_morphism(self, p: int, delta, vec: dict) -> Morphism:
        keys, _ = self.space(p, delta)
        M = pm.zeros(self.ring, self.Y.rank, self.X.rank)
        acc: dict = {}
        for idx, c in vec.items():
            i, j, m = keys[idx]
            acc.setdefault((i, j), {})[m] = c
        for (i, j), terms in acc.items():
            M[i][j] = Poly(self.ring, terms)
        return Morphism(self.X, self.Y, M, p)

    def components(self, F: Morphism) -> dict:
        """Split a linear map into homogeneous pieces: {degree: sparse vector}."""
        F = linearised(F)
        p = F.parity
        out: dict = {}
        for i in range(self.Y.rank):
            for j in range(self.X.rank):
                q = F.matrix[i][j]
                if not q:
                    continue
                for m, c in q.terms.items():
                    delta = self.ring.mono_weight(m) - self.b[i] + self.a[j]
                    _, index = self.space(p, delta)
                    out.setdefault(delta, {})[index[(i, j, m)]] = c
        return out

    def basis_at(self, p: int, delta) -> list[Morphism]:
        """Cocycles representing a basis of H^p in degree delta."""
        keys, _ = self.space(p, delta)
        if not keys:
            return []
        return [self.to_morphism(p, delta, vec) for vec in self._cohomology(p, delta)[0]]

    def basis(self, p: int) -> list[Morphism]:
        """Cocycles representing a basis of H^p."""
        out = []
        for delta in self.degree_window():
            keys, _ = self.space(p, delta)
            if not keys:
                continue
            for vec in self._cohomology(p, delta)[0]:
                out.append(self.to_morphism(p, delta, vec))
        return out

    def coordinates(self, F: Morphism) -> list:
        """Coordinates of a cocycle in the basis returned by ``basis``."""
        p = F.parity
        comps = self.components(F)
        coords = []
        for delta in self.degree_window():
            keys, _ = self.space(p, delta)
            if not keys:
                continue
            reps, ech, _ = self._cohomology(p, delta)
            vec = comps.pop(delta, {})
            r, acc = ech.reduce(vec)
            if r:
                raise HomologyError("not a cocycle (or outside the image + span of representatives)")
            coords.extend(-acc.get(k, 0) for k in range(len(reps)))
        for delta, vec in comps.items():
            if not self.is_exact_component(p, delta, vec):
                raise HomologyError(f"component of degree {delta} is not exact")
        return coords

    def is_exact_component(self, p: int, delta, vec: dict) -> bool:
        return self.solve_boundary(p, delta, vec) is not None

    def solve_boundary(self, p: int, delta, vec: dict):
        """x in C^{p+1, delta-1} with D x = vec, or None."""
        if not vec:
            return {}
        cols = self.d_columns(p + 1, Fraction(delta) - 1)
        return solve_columns(cols, vec)

    def null_homotopy(self, F: Morphism):
        """A witness h with D h = F, or None."""
        p = F.parity
        H = pm.zeros(self.ring, self.Y.rank, self.X.rank)
        for delta, vec in self.components(F).items():
            x = self.solve_boundary(p, delta, vec)
            if x is None:
                return None
            part = self.to_morphism(p + 1, Fraction(delta) - 1, x)
            H = pm.add(H, part.matrix)
        return Morphism(self.X, self.Y, H, p + 1)


# ---------------------------------------------------------------------------
# ungraded (syzygy) route


class SyzygyHom:
    """Hom complex as a complex of free R-modules."""

    def __init__(self, X: MF, Y: MF):
        ring = _common_ring(X, Y)
        if X.potential != embed(Y.potential, X.ring):
            raise HomologyError("source and target have different potentials")
        self.X, self.Y, self.ring = X, Y, ring
        self._pos = {p: [(i, j) for i in range(Y.rank) for j in range(X.rank)
                         if (Y.parity(i) + X.parity(j)) % 2 == p] for p in (0, 1)}

    def d_matrix(self, p: int) -> list[list[Poly]]:
        """Columns of D on parity p, as rows x cols matrix over R."""
        src = self._pos[p % 2]
        tgt = self._pos[(p + 1) % 2]
        tindex = {k: n for n, k in enumerate(tgt)}
        ring = self.ring
        M = pm.zeros(ring, len(tgt), len(src))
        DX = pm.embed_matrix(self.X.D, ring)
        DY = pm.embed_matrix(self.Y.D, ring)
        sgn = 1 if p % 2 else -1
        for c, (i, j) in enumerate(src):
            for k in range(self.Y.rank):
                if DY[k][i]:
                    r = tindex[(k, j)]
                    M[r][c] = M[r][c] + DY[k][i]
            for l in range(self.X.rank):
                if DX[j][l]:
                    r = tindex[(i, l)]
                    M[r][c] = M[r][c] + DX[j][l].scale(sgn)
        return M

    def cohomology_dimension(self, p: int) -> int:
        Dp = self.d_matrix(p)
        Dq = self.d_matrix(p + 1)  # into parity p
        n = len(self._pos[p % 2])
        if n == 0:
            return 0
        cols = [[Dp[r][c] for r in range(len(Dp))] for c in range(n)]
        if not Dp:
            kers = [[self.ring.one() if r == c else self.ring.zero() for r in range(n)] for c in range(n)]
        else:
            kers = syzygies(cols, self.ring)
        if not kers:
            return 0
        t = len(kers)
        images = [[Dq[r][c] for r in range(n)] for c in range(len(Dq[0]) if Dq else 0)]
        rel = syzygies(kers + images, self.ring)
        relations = [v[:t] for v in rel]
        relations = [v for v in relations if any(v)]
        return module_quotient_dimension(relations, t, self.ring)

    def dimensions(self) -> tuple[int, int]:
        return self.cohomology_dimension(0), self.cohomology_dimension(1)

    def null_homotopy(self, F: Morphism):
        F = linearised(F)
        p = F.parity
        src = self._pos[(p + 1) % 2]
        tgt = self._pos[p]
        A = self.d_matrix(p + 1)
        b = [embed(F.matrix[i][j], self.ring) for (i, j) in tgt]
        if not src:
            return None if any(b) else Morphism(self.X, self.Y, pm.zeros(self.ring, self.Y.rank, self.X.rank), p + 1)
        x = solve_linear_over_ring(A, b)
        if x is None:
            return None
        H = pm.zeros(self.ring, self.Y.rank, self.X.rank)
        for (i, j), q in zip(src, x):
            H[i][j] = q
        return Morphism(self.X, self.Y, H, p + 1)


def hom_complex(X: MF, Y: MF, method: str = "auto"):
    if method not in ("auto", "graded", "syzygy"):
        raise ValueError(f"unknown method {method}")
    if method in ("auto", "graded"):
        try:
            return HomComplex(X, Y)
        except HomologyError:
            if method == "graded":
                raise
    return SyzygyHom(X, Y)


def hom_dimensions(X: MF, Y: MF, method: str = "auto") -> tuple[int, int]:
    """(even, odd) dimensions of morphisms X -> Y modulo homotopy."""
    return hom_complex(X, Y, method).dimensions()


# ---------------------------------------------------------------------------
# null-homotopies


@dataclass
class NullHomotopyResult:
    null: bool
    witness: Morphism | None = None
    reason: str = ""

    def __bool__(self):
        return self.null


def is_null_homotopic(F: Morphism, method: str = "auto") -> NullHomotopyResult:
    """Decide whether F = d_Y h + (-1)^|F| ... i.e. F = D(h); returns a witness."""
    try:
        F = linearised(F)
    except HomologyError as exc:
        return NullHomotopyResult(False, None, str(exc))
    if not F.is_chain_map():
        return NullHomotopyResult(False, None, "not a chain map")
    if pm.is_zero(F.matrix):
        return NullHomotopyResult(True, Morphism(F.source, F.target, pm.zeros(F.ring, F.target.rank, F.source.rank),
                                                 F.parity + 1), "zero map")
    H = hom_complex(F.source, F.target, method)
    h = H.null_homotopy(F)
    if h is None:
        return NullHomotopyResult(False, None, "linear system has no solution")
    h = Morphism(F.source, F.target, pm.embed_matrix(h.matrix, F.ring), h.parity)
    if not hom_differential(h).equals(F):
        raise HomologyError("internal error: homotopy witness does not verify")
    return NullHomotopyResult(True, h, "")


def homotopic(F: Morphism, G: Morphism) -> NullHomotopyResult:
    return is_null_homotopic(linearised(F) - linearised(G))


# ---------------------------------------------------------------------------
# generic linear solving for morphisms


class MorphismSystem:
    """Linear system whose unknowns are homogeneous morphisms.

    Each unknown block is a graded piece C^{p, delta}(X, Y) of some hom
    complex; equations are accumulated as sparse maps from unknown basis
    elements to arbitrary hashable equation keys.
    """

    def __init__(self):
        self.blocks: list = []  # (HomComplex, p, delta, offset)
        self.columns: list[dict] = []
        self.rhs: dict = {}

    def add_unknown(self, H: HomComplex, p: int, delta) -> int:
        keys, _ = H.space(p, delta)
        off = len(self.columns)
        self.blocks.append((H, p % 2, Fraction(delta), off))
        self.columns.extend({} for _ in keys)
        return len(self.blocks) - 1

    def block_keys(self, b: int):
        H, p, delta, off = self.blocks[b]
        return H.space(p, delta)[0], off

    def add_term(self, b: int, fn: Callable[[int, int, int], dict], tag=None):
        """Add fn(i, j, m) (dict eqkey -> coeff) to the equations for each unknown of block b."""
        keys, off = self.block_keys(b)
        for n, (i, j, m) in enumerate(keys):
            img = fn(i, j, m)
            col = self.columns[off + n]
            for k, c in img.items():
                kk = (tag, k)
                v = col.get(kk, 0) + c
                if v:
                    col[kk] = v
                else:
                    col.pop(kk, None)

    def add_rhs(self, vec: dict, tag=None):
        for k, c in vec.items():
            kk = (tag, k)
            v = self.rhs.get(kk, 0) + c
            if v:
                self.rhs[kk] = v
            else:
                self.rhs.pop(kk, None)

    def solve(self):
        """List of morphisms (one per block), or None."""
        index: dict = {}
        cols = []
        for col in self.columns:
            cols.append({index.setdefault(k, len(index)): c for k, c in col.items()})
        rhs = {}
        for k, c in self.rhs.items():
            if k not in index:
                return None
            rhs[index[k]] = c
        x = solve_columns(cols, rhs)
        if x is None:
            return None
        out = []
        for H, p, delta, off in self.blocks:
            keys = H.space(p, delta)[0]
            vec = {n: x[off + n] for n in range(len(keys)) if x.get(off + n)}
            out.append(H.to_morphism(p, delta, vec))
        return out


def matrix_terms(M: pm.Matrix) -> dict:
    """{(row, col, mono): coeff} for a polynomial matrix."""
    out = {}
    for i, row in enumerate(M):
        for j, p in enumerate(row):
            for m, c in p.terms.items():
                out[(i, j, m)] = c
    return out


def _d_fn(H: HomComplex, p: int):
    return lambda i, j, m: H.apply_d(p, i, j, m)


def _post_fn(F: Morphism):
    """m E_ij -> F o (m E_ij) as matrix terms (F may be semilinear)."""
    cols = [[(k, F.matrix[k][i]) for k in range(len(F.matrix)) if F.matrix[k][i]]
            for i in range(len(F.matrix[0]) if F.matrix else 0)]
    src_ring = F.source.ring
    cache: dict = {}

    def fn(i, j, m):
        s = cache.get(m)
        if s is None:
            s = F.sigma(Poly(src_ring, {m: src_ring.field.one()}))
            cache[m] = s
        out: dict = {}
        for k, q in cols[i]:
            prod = q * s
            for t, c in prod.terms.items():
                key = (k, j, t)
                v = out.get(key, 0) + c
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
        return out
    return fn


def _pre_fn(G: Morphism, ring: RingSpec):
    """m E_ij -> (m E_ij) o G (G linear into the unknown's source)."""
    GM = pm.embed_matrix(G.matrix, ring)
    rows = [[(l, p) for l, p in enumerate(r) if p] for r in GM]

    def fn(i, j, m):
        out: dict = {}
        for l, q in rows[j]:
            for t, c in q.terms.items():
                key = (i, l, m + t)
                v = out.get(key, 0) + c
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
        return out
    return fn


def homogeneous_degree(F: Morphism, H: HomComplex):
    comps = H.components(F)
    if len(comps) > 1:
        raise HomologyError("morphism is not homogeneous")
    return next(iter(comps)) if comps else None


def homotopy_inverse(F: Morphism, strict_left: bool = False) -> Morphism | None:
    """G with F G ~ 1 and G F ~ 1, or None.

    Graded inputs: F must be homogeneous (degree delta); G has degree -delta
    and both homotopies are solved for in one linear system.
    """
    F = linearised(F)
    if F.parity:
        raise HomologyError("homotopy inverses are computed for even maps")
    X, Y = F.source, F.target
    try:
        HXY = HomComplex(X, Y)
    except HomologyError:
        return _homotopy_inverse_syzygy(F)
    HYX = HomComplex(HXY.Y, HXY.X)
    HXX = HomComplex(HXY.X, HXY.X)
    HYY = HomComplex(HXY.Y, HXY.Y)
    Fg = Morphism(HXY.X, HXY.Y, pm.embed_matrix(F.matrix, HXY.ring), 0)
    if pm.is_zero(Fg.matrix):
        if HXX.dimensions() == (0, 0) and HYY.dimensions() == (0, 0):
            return Morphism(HXY.Y, HXY.X, pm.zeros(HXY.ring, X.rank, Y.rank), 0)
        return None
    delta = homogeneous_degree(Fg, HXY)
    sysm = MorphismSystem()
    g = sysm.add_unknown(HYX, 0, -delta)
    h1 = sysm.add_unknown(HYY, 1, -1)
    # chain condition on G
    sysm.add_term(g, _d_fn(HYX, 0), tag="chain")
    # F G - 1 = D h1
    sysm.add_term(g, _post_fn(Fg), tag="right")
    sysm.add_term(h1, lambda i, j, m: {k: -c for k, c in HYY.apply_d(1, i, j, m).items()}, tag="right")
    sysm.add_rhs(matrix_terms(pm.identity(HXY.ring, Y.rank)), tag="right")
    if not strict_left:
        h2 = sysm.add_unknown(HXX, 1, -1)
        sysm.add_term(g, _pre_fn(Fg, HXY.ring), tag="left")
        sysm.add_term(h2, lambda i, j, m: {k: -c for k, c in HXX.apply_d(1, i, j, m).items()}, tag="left")
        sysm.add_rhs(matrix_terms(pm.identity(HXY.ring, X.rank)), tag="left")
    sol = sysm.solve()
    if sol is None:
        return None
    G = sol[0]
    return Morphism(Y, X, pm.embed_matrix(G.matrix, X.ring), 0)


def _homotopy_inverse_syzygy(F: Morphism) -> Morphism | None:
    raise HomologyError("homotopy inverses need graded input")


# ---------------------------------------------------------------------------
# minimal models


@dataclass
class MinimalModel:
    mf: MF
    iota: Morphism | None  # mf -> X
    pi: Morphism | None  # X -> mf
    reduced: bool  # True if every entry of d lies in the maximal ideal
    kept: list = field(default_factory=list)  # original indices of surviving basis vectors


def _const_term(p: Poly):
    return p.terms.get(0)


def eliminate_units(ring: RingSpec, n: int, cols: dict, track: bool = True):
    """Gaussian elimination of constant entries in a sparse odd differential.

    ``cols`` maps column j to {row i: entry}; it is modified in place.
    Returns (alive, cols, iota, pi) where iota[l] / pi[k] are sparse vectors
    over the original basis describing the inclusion and projection.
    """
    rows: dict = {i: set() for i in range(n)}
    consts = set()
    for j, col in cols.items():
        for i, p in col.items():
            rows[i].add(j)
            if p.is_constant():
                consts.add((i, j))
    alive = set(range(n))
    iota = {l: {l: ring.one()} for l in range(n)} if track else None
    pi = {k: {k: ring.one()} for k in range(n)} if track else None

    def pick():
        best = None
        for (i, j) in consts:
            cost = (len(rows[i]) - 1) * (len(cols[j]) - 1)
            if best is None or cost < best[0]:
                best = (cost, i, j)
                if cost == 0:
                    break
        return best

    def combine(vec, src, factor):
        # vec -= factor * src
        for o, q in src.items():
            nv = vec.get(o, ring.zero()) - q * factor
            if nv:
                vec[o] = nv
            else:
                vec.pop(o, None)

    while consts:
        _, i, j = pick()
        inv = invert(cols[j][i].constant_term())
        col_j = {k: p for k, p in cols[j].items() if k != i}
        row_i = {l: cols[l][i].scale(inv) for l in rows[i] if l != j}
        for l, al in row_i.items():
            for k, b in col_j.items():
                upd = cols[l].get(k)
                new = (upd if upd is not None else ring.zero()) - b * al
                if new:
                    cols[l][k] = new
                    rows[k].add(l)
                    if new.is_constant():
                        consts.add((k, l))
                    else:
                        consts.discard((k, l))
                elif upd is not None:
                    del cols[l][k]
                    rows[k].discard(l)
                    consts.discard((k, l))
        if track:
            for l, al in row_i.items():
                combine(iota[l], iota[j], al)
            for k, b in col_j.items():
                combine(pi[k], pi[i], b.scale(inv))
        for idx in (i, j):
            for k in list(cols[idx]):
                rows[k].discard(idx)
                consts.discard((k, idx))
            for l in list(rows[idx]):
                cols[l].pop(idx, None)
                consts.discard((idx, l))
            cols[idx] = {}
            rows[idx] = set()
            alive.discard(idx)
            if track:
                iota.pop(idx, None)
                pi.pop(idx, None)
    return alive, cols, iota, pi


def minimal_model_sparse(ring: RingSpec, potential: Poly, cols: dict, parities: Sequence[int],
                         grading=None, track: bool = True, check: bool = True, **mfkw):
    """minimal_model for a factorisation given by sparse columns.

    Returns (MinimalModel, iota_vectors, pi_vectors) where the maps are kept
    as sparse vectors (the original factorisation may be large).
    """
    n = len(parities)
    alive, cols, iota, pi = eliminate_units(ring, n, cols, track)
    kept = sorted(alive, key=lambda k: (parities[k], k))
    r0 = sum(1 for k in kept if parities[k] == 0)
    pos = {k: m for m, k in enumerate(kept)}
    M = pm.zeros(ring, len(kept), len(kept))
    reduced = True
    for l in kept:
        for k, p in cols[l].items():
            M[pos[k]][pos[l]] = p
            if _const_term(p):
                reduced = False
    g = None if grading is None else tuple(grading[k] for k in kept)
    Y = MF.from_full(ring, potential, M, r0, len(kept) - r0, grading=g, check=check, **mfkw)
    iv = [iota[k] for k in kept] if track else None
    pv = [pi[k] for k in kept] if track else None
    return MinimalModel(Y, None, None, reduced, kept), iv, pv


def minimal_model(X: MF, track: bool = True) -> MinimalModel:
    """Strip contractible rank (1|1) summands using constant pivots.

    A pivot D[i][j] = c (nonzero constant) lets us drop basis vectors i
    and j; the new differential on the rest is D_BB - D_Bj c^-1 D_iB.
    With ``track`` the maps iota: X' -> X and pi: X -> X' are returned
    (pi iota = 1 and iota pi is homotopic to 1).  Over an ungraded ring
    only entries that are constants are used as pivots, so ``reduced``
    may come back False.
    """
    ring = X.ring
    N = X.rank
    D = X.D
    cols = {j: {i: D[i][j] for i in range(N) if D[i][j]} for j in range(N)}
    mm, iv, pv = minimal_model_sparse(ring, X.potential, cols, [X.parity(k) for k in range(N)],
                                      X.grading, track, target_vars=X.target_vars,
                                      source_vars=X.source_vars, name=X.name)
    if track:
        Y = mm.mf
        k = Y.rank
        IM = pm.zeros(ring, N, k)
        PM = pm.zeros(ring, k, N)
        for c, vec in enumerate(iv):
            for o, q in vec.items():
                IM[o][c] = q
        for r, vec in enumerate(pv):
            for o, q in vec.items():
                PM[r][o] = q
        mm.iota = Morphism(Y, X, IM, 0)
        mm.pi = Morphism(X, Y, PM, 0)
    return mm


def restrict_to(X: MF, keep: Sequence[int]) -> MF:
    """Sub-factorisation on basis vectors ``keep`` (assumed d-stable)."""
    keep = sorted(keep, key=lambda k: (X.parity(k), k))
    D = X.D
    M = [[D[a][b] for b in keep] for a in keep]
    r0 = sum(1 for k in keep if X.parity(k) == 0)
    grading = None if X.grading is None else tuple(X.grading[k] for k in keep)
    return MF.from_full(X.ring, X.potential, M, r0, len(keep) - r0, grading=grading,
                        target_vars=X.target_vars, source_vars=X.source_vars, check=True, name=X.name)


# ---------------------------------------------------------------------------
# idempotents


@dataclass
class Splitting:
    image: MF
    xi: Morphism  # image -> X
    theta: Morphism  # X -> image
    idempotent: Morphism  # strict idempotent on the minimal model used
    iterations: int


def _constant_part(M: pm.Matrix) -> list[list]:
    return [[(p.terms.get(0, 0) if p else 0) for p in row] for row in M]


def strictify(e: Morphism, max_iter: int = 64) -> tuple[Morphism, int]:
    """Apply e -> 3e^2 - 2e^3 until e^2 = e exactly."""
    e = linearised(e)
    for it in range(max_iter + 1):
        e2 = e @ e
        if e2.equals(e):
            return e, it
        e3 = e2 @ e
        e = e2.scale(3) - e3.scale(2)
    raise HomologyError(f"idempotent did not become strict within {max_iter} iterations")


def split_idempotent(X: MF, e: Morphism, max_iter: int = 64) -> Splitting:
    """Image of an idempotent (up to homotopy) endomorphism e of X.

    X is first replaced by its minimal model; the transported idempotent is
    strictified and its image split off with constant pivots.
    """
    e = linearised(e)
    if e.parity:
        raise HomologyError("idempotent must be even")
    sq = e @ e - e
    chk = is_null_homotopic(sq)
    if not chk:
        raise HomologyError("e^2 - e is not null-homotopic")
    mm = minimal_model(X)
    Y = mm.mf
    et = mm.pi @ e @ mm.iota
    et = Morphism(Y, Y, et.matrix, 0)
    if not mm.reduced:
        raise HomologyError("minimal model is not reduced; strictification needs a local graded setting")
    es, it = strictify(et, max_iter)
    E0 = _constant_part(es.matrix)
    n = Y.rank
    # choose independent columns J of E0 and rows I with E0[I, J] invertible
    J, I = _pivot_sets(E0, n)
    ring = Y.ring
    r0 = sum(1 for j in J if Y.parity(j) == 0)
    Jord = sorted(J, key=lambda j: (Y.parity(j), j))
    Iord = sorted(I, key=lambda i: (Y.parity(i), i))
    EJ = [[es.matrix[i][j] for j in Jord] for i in range(n)]
    sq_IJ = [[es.matrix[i][j] for j in Jord] for i in Iord]
    inv = _invert_unimodular(sq_IJ, ring)
    eI = [es.matrix[i] for i in Iord]
    Th = pm.matmul(inv, eI, ring) if Iord else []
    k = len(Jord)
    if k == 0:
        img = MF(ring, Y.potential, [], [], 0, 0, grading=() if Y.grading is not None else None,
                 target_vars=Y.target_vars, source_vars=Y.source_vars, check=True)
        xi = Morphism(img, X, pm.zeros(ring, X.rank, 0), 0)
        th = Morphism(X, img, [[] for _ in range(0)], 0)
        return Splitting(img, xi, th, es, it)
    Dn = pm.matmul(pm.matmul(Th, Y.D, ring), EJ, ring)
    grading = None if Y.grading is None else tuple(Y.grading[j] for j in Jord)
    img = MF.from_full(ring, Y.potential, Dn, r0, k - r0, grading=grading,
                       target_vars=Y.target_vars, source_vars=Y.source_vars, check=True)
    xi_Y = Morphism(img, Y, EJ, 0)
    th_Y = Morphism(Y, img, Th, 0)
    if not (th_Y @ xi_Y).equals(img.identity()):
        raise HomologyError("internal error: theta xi != 1")
    xi = mm.iota @ xi_Y
    th = th_Y @ mm.pi
    return Splitting(img, xi, th, es, it)


def _pivot_sets(E0, n):
    ech = Echelon()
    J = []
    for j in range(n):
        col = {i: E0[i][j] for i in range(n) if E0[i][j]}
        r, _ = ech.add(col)
        if r is not None:
            J.append(j)
    # rows: choose I with E0[I, J] invertible (greedy on rows of the J columns)
    ech2 = Echelon()
    I = []
    for i in range(n):
        row = {jj: E0[i][j] for jj, j in enumerate(J) if E0[i][j]}
        r, _ = ech2.add(row)
        if r is not None:
            I.append(i)
    if len(I) != len(J):
        raise HomologyError("could not find an invertible constant block")
    return J, I


def _invert_unimodular(A: pm.Matrix, ring: RingSpec) -> pm.Matrix:
    """Inverse of a polynomial matrix with constant nonzero determinant."""
    n = len(A)
    if n == 0:
        return []
    det = pm.det(A, ring)
    if not det.is_constant() or not det:
        raise HomologyError("block is not invertible over the polynomial ring")
    dinv = invert(det.constant_term())
    out = pm.zeros(ring, n, n)
    for i in range(n):
        for j in range(n):
            minor = [[A[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
            cof = pm.det(minor, ring) if minor else ring.one()
            if (i + j) % 2:
                cof = -cof
            out[i][j] = cof.scale(dinv)
    return out
