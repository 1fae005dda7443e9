"""Fusion of defects over shared intermediate variables.

Y (x) X for X: W(x) -> V(y) and Y: V(y) -> U(z) is a factorisation of
U(z) - W(x) over k[z, x] of infinite rank (it is free over k[z, y, x]).
A finite representative is found by truncating in the intermediate
variables: Q = M / (y_1^N_1, ..., y_k^N_k) M.  Because each y_i^N_i lies in
the Jacobian ideal of V it acts null-homotopically, so Q is homotopy
equivalent to a sum of 2^k copies of M with generator degrees shifted by
the weights of the y_i^N_i.  After stripping constant pivots, the copy of M
is the set of generators of low degree; the exponents N_i are chosen large
enough that the copies are separated by a degree gap, and the gap is
checked on the output.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Sequence

from .groebner import lift_monomial_powers
from .homalg import minimal_model_sparse, restrict_to
from .mf import MF, MFError, external_product, infer_grading, infer_weights, tensor
from .poly import BITS, FIELD_MASK, Poly, RingSpec, embed, homogeneity, prime_name, rename
from .residue import jacobi_ring, outer_potentials
from .scalar import join_fields

__all__ = ["FusionError", "FusionResult", "fuse", "fusion_details", "external_product", "default_safety"]


class FusionError(MFError):
    """Fusion could not be carried out or failed a consistency check."""


def default_safety() -> int:
    val = os.environ.get("LGDEFECT_SAFETY")
    if val is None:
        return 2
    try:
        s = int(val)
    except ValueError:
        raise FusionError(f"LGDEFECT_SAFETY must be a positive integer, got {val!r}") from None
    if s < 1:
        raise FusionError("LGDEFECT_SAFETY must be at least 1")
    return s


@dataclass
class FusionResult:
    mf: MF  # finite-rank representative over k[z, x]
    bounds: tuple  # truncation exponents N_i used
    certified: tuple  # minimal N_i with y_i^N_i in the Jacobian ideal of V
    safety: int
    truncated_rank: int  # rank of Q before stripping
    stripped_rank: int  # rank of the minimal model of Q
    window: tuple  # (lowest generator degree of M, bound hi)
    gap: Fraction | None  # lowest degree among discarded generators
    renaming: dict = field(default_factory=dict)  # variable renaming applied to the inputs
    # data for transporting maps between the infinite tensor and the finite model
    tensor: MF | None = None
    intermediate: tuple = ()
    q_basis: list = field(default_factory=list)
    iota: list = field(default_factory=list)  # kept generator -> sparse vector over q_basis
    pi: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# weights


def _normalised_degrees(P: Poly, names: Sequence[str], hint: RingSpec) -> dict:
    """Variable degrees making P (in ``names``) homogeneous of degree 2."""
    if not names:
        return {}
    sub = hint.sub(names) if all(v in hint.variables for v in names) else None
    Pr = embed(P, RingSpec(tuple(names), None, P.ring.field))
    if not Pr:
        raise FusionError(f"potential in {tuple(names)} is zero: not an isolated singularity")
    w = infer_weights(Pr)
    if w is None and sub is not None and sub.graded:
        h = homogeneity(embed(Pr, sub))
        if h is not None:
            w = tuple(d * 2 / h for d in sub.degrees)
    if w is None:
        raise FusionError(f"{Pr} is not quasi-homogeneous with determined weights; fusion needs graded input")
    return dict(zip(names, w))


def _fresh(name: str, taken: set) -> str:
    k = 1
    cand = prime_name(name, k)
    while cand in taken:
        k += 1
        cand = prime_name(name, k)
    return cand


def _graded(X: MF, ring: RingSpec) -> MF:
    g = infer_grading(X.with_ring(ring).copy_with(grading=None))
    if g is None:
        raise FusionError("fusion input is not quasi-homogeneous (no consistent generator degrees)")
    return X.with_ring(ring).copy_with(grading=g)


# ---------------------------------------------------------------------------
# fusion


def fuse(Y: MF, X: MF, intermediate: Sequence[str] | None = None, safety: int | None = None) -> MF:
    """Finite-rank representative of Y (x) X (X acts first)."""
    return fusion_details(Y, X, intermediate, safety).mf


def fusion_details(Y: MF, X: MF, intermediate: Sequence[str] | None = None,
                   safety: int | None = None, keep_maps: bool = False) -> FusionResult:
    """Fuse and report the truncation data.

    ``intermediate`` names the variables shared by Y (as its source) and X
    (as its target); by default Y.source_vars is matched positionally with
    X.target_vars.  Source variables of X that clash with target variables
    of Y are renamed with primes (see ``renaming`` on the result).
    """
    if safety is None:
        safety = default_safety()
    if safety < 1:
        raise FusionError("safety factor must be at least 1")
    if not (Y.is_defect() and X.is_defect()):
        raise FusionError("fusion needs source/target splits on both factors")
    if Y.internal_vars() or X.internal_vars():
        raise FusionError("fusion inputs must not have internal variables")
    ys, xt = tuple(Y.source_vars), tuple(X.target_vars)
    if intermediate is not None:
        inter = tuple(intermediate)
        if set(inter) != set(ys) or set(inter) != set(xt):
            raise FusionError(f"intermediate variables {inter} must be the source of Y and the target of X")
        ys = xt = inter
    if len(ys) != len(xt):
        raise FusionError(f"cannot match source {ys} of Y with target {xt} of X")
    zt, xs = tuple(Y.target_vars), tuple(X.source_vars)
    taken = set(zt) | set(ys) | set(xt) | set(xs)
    # fresh names for the intermediate variables
    mids = []
    for v in ys:
        m = _fresh(v, taken)
        taken.add(m)
        mids.append(m)
    mids = tuple(mids)
    xs_new = []
    ren_x = dict(zip(xt, mids))
    for v in xs:
        if v in zt:
            w = _fresh(v, taken)
            taken.add(w)
            ren_x[v] = w
            xs_new.append(w)
        else:
            xs_new.append(v)
    xs_new = tuple(xs_new)
    ren_y = dict(zip(ys, mids))

    U, Vy = outer_potentials(Y)
    Vx, W = outer_potentials(X)
    field_ = join_fields(Y.ring.field, X.ring.field)
    base = RingSpec(zt + mids + xs_new, None, field_)
    Vy_m = rename(Vy, ren_y, base)
    Vx_m = rename(Vx, ren_x, base)
    if Vy_m != Vx_m:
        raise FusionError(f"potentials do not match on the intermediate variables: {Vy_m} vs {Vx_m}")
    U_b = embed(U, base)
    W_b = rename(W, ren_x, base)
    degs: dict = {}
    degs.update(_normalised_degrees(U_b, zt, Y.ring))
    degs.update(_normalised_degrees(Vy_m, mids, RingSpec(mids, None, field_)))
    hint_x = X.ring.sub(xs) if X.ring.graded else None
    if hint_x is not None:
        hint_x = RingSpec(xs_new, hint_x.degrees, field_)
    degs.update(_normalised_degrees(W_b, xs_new, hint_x or RingSpec(xs_new, None, field_)))
    ring = RingSpec(base.variables, tuple(degs[v] for v in base.variables), field_)
    Yr = _graded(Y.renamed(ren_y, RingSpec(zt + mids, ring.sub(zt + mids).degrees, field_)), ring.sub(zt + mids))
    Xr = _graded(X.renamed(ren_x, RingSpec(mids + xs_new, ring.sub(mids + xs_new).degrees, field_)),
                 ring.sub(mids + xs_new))
    M = tensor(Yr, Xr, ring=ring, check=False)
    M = M.copy_with(target_vars=zt, source_vars=xs_new)

    # certified truncation data
    J = jacobi_ring(Vy_m, mids)
    certified, _ = lift_monomial_powers(J.ideal)
    sub_m = ring.sub(mids)
    soc = max((sub_m.mono_weight(_pack_sub(e)) for e in J.basis), default=Fraction(0))
    conv = [-g for g in M.grading]
    lo = min(conv)
    hi = max(conv) + soc
    bounds = []
    for i, v in enumerate(mids):
        w = sub_m.degrees[i]
        need = floor((hi - lo + 2) / w) + 1
        bounds.append(max(certified[i], need) * safety)
    bounds = tuple(bounds)
    res = _truncate_and_strip(M, ring, mids, zt, xs_new, bounds, keep_maps)
    Q_min, q_basis, iv, pv, q_rank = res
    # separate the low copy
    qconv = [-g for g in Q_min.grading]
    low = [k for k in range(Q_min.rank) if qconv[k] <= hi]
    high = [k for k in range(Q_min.rank) if qconv[k] > hi]
    gap = min((qconv[k] for k in high), default=None)
    if low and gap is not None and gap <= max(qconv[k] for k in low) + 1:
        raise FusionError(f"truncation copies overlap (gap at degree {gap}); raise the safety factor")
    if Q_min.rank != len(low) * 2 ** len(mids):
        raise FusionError(f"stripped truncation has rank {Q_min.rank}, expected {2 ** len(mids)} copies of "
                          f"{len(low)}: raise the safety factor")
    Dq = Q_min.D
    for l in low:
        for k in high:
            if Dq[k][l]:
                raise FusionError("low-degree part is not closed under the differential")
    L = restrict_to(Q_min, low) if low else _empty_like(Q_min)
    L = L.copy_with(target_vars=zt, source_vars=xs_new, name=None)
    L.check()
    renaming = {v: ren_x[v] for v in xs if ren_x.get(v, v) != v}
    out = FusionResult(L, bounds, tuple(certified), safety, q_rank, Q_min.rank, (lo, hi), gap, renaming)
    if keep_maps:
        order = sorted(low, key=lambda k: (Q_min.parity(k), k))
        out.tensor = M
        out.intermediate = mids
        out.q_basis = q_basis
        out.iota = [iv[k] for k in order]
        out.pi = [pv[k] for k in order]
    return out


def _pack_sub(e):
    m = 0
    for i, x in enumerate(e):
        m |= x << (BITS * i)
    return m


def _empty_like(X: MF) -> MF:
    return MF(X.ring, X.potential, [], [], 0, 0, grading=(), target_vars=X.target_vars,
              source_vars=X.source_vars, check=False)


def _truncate_and_strip(M: MF, ring: RingSpec, mids, zt, xs, bounds, keep_maps):
    """Build Q = M / (y^N) M over k[z, x] and strip it to a minimal model."""
    qring = ring.sub(zt + xs)
    names = ring.variables
    mid_pos = [names.index(v) for v in mids]
    outer_pos = [names.index(v) for v in zt + xs]

    split_cache: dict = {}

    def split(m: int):
        hit = split_cache.get(m)
        if hit is None:
            e = tuple((m >> (BITS * p)) & FIELD_MASK for p in mid_pos)
            q = 0
            for k, p in enumerate(outer_pos):
                q |= ((m >> (BITS * p)) & FIELD_MASK) << (BITS * k)
            hit = (e, q)
            split_cache[m] = hit
        return hit

    # entries of D split by intermediate exponent
    D = M.D
    r = M.rank
    pieces = []  # per column f: list of (row k, mid exponent, poly over qring)
    for f in range(r):
        lst = []
        for k in range(r):
            p = D[k][f]
            if not p:
                continue
            acc: dict = {}
            for m, c in p.terms.items():
                e, q = split(m)
                acc.setdefault(e, {})[q] = c
            for e, terms in acc.items():
                lst.append((k, e, Poly(qring, terms)))
        pieces.append(lst)
    exps = list(itertools.product(*[range(N) for N in bounds]))
    basis = [(f, e) for f in range(r) for e in exps]
    parities = [M.parity(f) for f, _ in basis]
    index = {b: n for n, b in enumerate(basis)}
    mid_ring = ring.sub(mids)
    grading = [M.grading[f] - mid_ring.mono_weight(_pack_sub(e)) for f, e in basis]
    cols: dict = {}
    for n, (f, e) in enumerate(basis):
        col: dict = {}
        for k, em, p in pieces[f]:
            tgt = tuple(a + b for a, b in zip(e, em))
            if any(t >= N for t, N in zip(tgt, bounds)):
                continue
            row = index[(k, tgt)]
            old = col.get(row)
            new = p if old is None else old + p
            if new:
                col[row] = new
            else:
                col.pop(row, None)
        cols[n] = col
    W = Poly(qring, {split(m)[1]: c for m, c in M.potential.terms.items()})
    mm, iv, pv = minimal_model_sparse(qring, W, cols, parities, grading, track=keep_maps, check=False,
                                      target_vars=zt, source_vars=xs)
    return mm.mf, basis, iv, pv, len(basis)
