"""Groebner bases with cofactor tracking, for ideals and for submodules of R^k.

Ideals use Buchberger's algorithm with the sugar selection strategy and
track every basis element as a combination of the input generators.
Submodules of free modules use a position-over-term order; syzygies and
linear solves are read off an augmented module basis.
"""

from __future__ import annotations

import heapq
import itertools
import threading
from dataclasses import dataclass, field
from typing import Sequence

from gmpy2 import mpq

from .poly import (BITS, FIELD_MASK, Poly, RingSpec, divides, grevlex_key, mono_degree,
                   mono_lcm, pack, unpack)


class NonIsolatedError(ValueError):
    """The quotient by an ideal is infinite dimensional (or not supported at the origin)."""


def _inv(c):
    return 1 / (c if not isinstance(c, int) else mpq(c))


@dataclass
class IdealBasis:
    ring: RingSpec
    generators: list
    groebner: list
    transform: list  # transform[j][i]: coefficient of generators[i] in groebner[j]
    leads: list = field(default_factory=list)

    def __post_init__(self):
        if not self.leads:
            self.leads = [g.leading_monomial() for g in self.groebner]

    def is_unit(self) -> bool:
        return any(m == 0 for m in self.leads)

    def contains(self, f: Poly) -> bool:
        return not normal_form(f, self, track=False).remainder


@dataclass
class NormalFormResult:
    remainder: Poly
    cofactors: list


# ---------------------------------------------------------------------------
# reduction


def _reduce(f: Poly, basis: Sequence[Poly], leads: Sequence[int], full: bool = True):
    """Divide f by a monic basis.  Returns (remainder, quotients dict j -> Poly-terms)."""
    ring = f.ring
    n = ring.n
    p = dict(f.terms)
    rem = {}
    quot: dict[int, dict] = {}
    keyf = lambda m: grevlex_key(m, n)
    # heap of candidate monomials (max-heap by grevlex key)
    heap = [(_neg_key(keyf(m)), m) for m in p]
    heapq.heapify(heap)
    while heap:
        _, m = heapq.heappop(heap)
        c = p.get(m)
        if c is None:
            continue
        for j, lm in enumerate(leads):
            if divides(lm, m, n):
                shift = m - lm
                q = quot.setdefault(j, {})
                q[shift] = q.get(shift, 0) + c
                for gm, gc in basis[j].terms.items():
                    t = gm + shift
                    v = p.get(t)
                    if v is None:
                        p[t] = -c * gc
                        heapq.heappush(heap, (_neg_key(keyf(t)), t))
                    else:
                        v = v - c * gc
                        if v:
                            p[t] = v
                        else:
                            del p[t]
                break
        else:
            del p[m]
            rem[m] = c
            if not full:
                for mm, cc in p.items():
                    rem[mm] = cc
                break
    return Poly(ring, rem), {j: Poly(ring, {m: c for m, c in q.items() if c}) for j, q in quot.items()}


def _neg_key(k):
    return tuple(-x for x in k)


# ---------------------------------------------------------------------------
# Buchberger for ideals

_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def _cache_key(gens):
    ring = gens[0].ring
    return (ring.variables, ring.field, tuple(frozenset(g.terms.items()) for g in gens))


def buchberger(gens: Sequence[Poly], use_cache: bool = True) -> IdealBasis:
    """Reduced Groebner basis of the ideal generated by ``gens`` (grevlex)."""
    gens = list(gens)
    if not gens:
        raise ValueError("need at least one generator")
    ring = gens[0].ring
    for g in gens:
        g._check(gens[0])
    key = _cache_key(gens) if use_cache else None
    if key is not None:
        with _CACHE_LOCK:
            hit = _CACHE.get(key)
        if hit is not None:
            return hit
    result = _buchberger(ring, gens)
    if key is not None:
        with _CACHE_LOCK:
            _CACHE.setdefault(key, result)
    return result


def clear_cache():
    with _CACHE_LOCK:
        _CACHE.clear()


def _buchberger(ring: RingSpec, gens: list) -> IdealBasis:
    n = ring.n
    r = len(gens)
    zero = ring.zero()
    G: list[Poly] = []
    T: list[list[Poly]] = []
    L: list[int] = []
    sugar: list[int] = []
    pairs: list = []
    counter = itertools.count()

    def unit_vec(i):
        return [ring.one() if k == i else zero for k in range(r)]

    def add(poly, cof, sug):
        lm, lc = poly.leading_term()
        inv = _inv(lc)
        poly = poly.scale(inv)
        cof = [c.scale(inv) for c in cof]
        idx = len(G)
        G.append(poly)
        T.append(cof)
        L.append(lm)
        sugar.append(sug)
        for j in range(idx):
            lcm = mono_lcm(L[j], lm, n)
            if lcm == L[j] + lm:  # coprime leading monomials
                continue
            s = max(sugar[j] + mono_degree(lcm - L[j]), sug + mono_degree(lcm - lm))
            heapq.heappush(pairs, (s, mono_degree(lcm), next(counter), j, idx, lcm))

    def reduce_tracked(p, cof):
        rem, quot = _reduce(p, G, L)
        if quot:
            cof = list(cof)
            for j, q in quot.items():
                for i in range(r):
                    if T[j][i]:
                        cof[i] = cof[i] - q * T[j][i]
        return rem, cof

    for i, g in enumerate(gens):
        if not g:
            continue
        rem, cof = reduce_tracked(g, unit_vec(i))
        if rem:
            add(rem, cof, g.total_degree())

    done = set()
    while pairs:
        s, _, _, i, j, lcm = heapq.heappop(pairs)
        # chain criterion
        skip = False
        for k in range(len(G)):
            if k in (i, j):
                continue
            if divides(L[k], lcm, n) and (min(i, k), max(i, k)) in done and (min(j, k), max(j, k)) in done:
                skip = True
                break
        done.add((min(i, j), max(i, j)))
        if skip:
            continue
        mi = lcm - L[i]
        mj = lcm - L[j]
        sp = G[i].mul_term(mi, 1) - G[j].mul_term(mj, 1)
        cof = [T[i][k].mul_term(mi, 1) - T[j][k].mul_term(mj, 1) for k in range(r)]
        rem, cof = reduce_tracked(sp, cof)
        if rem:
            add(rem, cof, s)

    # minimize
    keep = []
    for a in range(len(G)):
        if any(b != a and divides(L[b], L[a], n) and (L[b] != L[a] or b < a) for b in range(len(G))):
            continue
        keep.append(a)
    G2 = [G[a] for a in keep]
    T2 = [T[a] for a in keep]
    L2 = [L[a] for a in keep]
    # interreduce tails
    for a in range(len(G2)):
        others = [G2[b] for b in range(len(G2)) if b != a]
        oleads = [L2[b] for b in range(len(G2)) if b != a]
        oidx = [b for b in range(len(G2)) if b != a]
        lm = L2[a]
        lc = G2[a].terms[lm]
        tail = Poly(ring, {m: c for m, c in G2[a].terms.items() if m != lm})
        rem, quot = _reduce(tail, others, oleads)
        new = rem + Poly(ring, {lm: lc})
        cof = list(T2[a])
        for jj, q in quot.items():
            b = oidx[jj]
            for i in range(r):
                if T2[b][i]:
                    cof[i] = cof[i] - q * T2[b][i]
        G2[a] = new
        T2[a] = cof
    order = sorted(range(len(G2)), key=lambda a: grevlex_key(L2[a], n))
    return IdealBasis(ring, gens, [G2[a] for a in order], [T2[a] for a in order], [L2[a] for a in order])


def normal_form(f: Poly, I: IdealBasis, track: bool = True) -> NormalFormResult:
    if f.ring.variables != I.ring.variables:
        raise ValueError(f"ring mismatch: {f.ring} vs {I.ring}")
    rem, quot = _reduce(f, I.groebner, I.leads)
    cof = []
    if track:
        r = len(I.generators)
        cof = [I.ring.zero() for _ in range(r)]
        for j, q in quot.items():
            for i in range(r):
                if I.transform[j][i]:
                    cof[i] = cof[i] + q * I.transform[j][i]
    return NormalFormResult(rem, cof)


def reduce_mod(f: Poly, I: IdealBasis) -> Poly:
    return _reduce(f, I.groebner, I.leads)[0]


def _pure_power_bounds(I: IdealBasis) -> list[int]:
    n = I.ring.n
    bounds = [None] * n
    for lm in I.leads:
        e = unpack(lm, n)
        nz = [i for i, x in enumerate(e) if x]
        if len(nz) == 1:
            i = nz[0]
            if bounds[i] is None or e[i] < bounds[i]:
                bounds[i] = e[i]
        elif not nz:
            return [0] * n
    return bounds


def quotient_basis(I: IdealBasis) -> list[tuple[int, ...]]:
    """Standard monomials (exponent tuples), ascending in grevlex."""
    n = I.ring.n
    bounds = _pure_power_bounds(I)
    missing = [I.ring.variables[i] for i, b in enumerate(bounds) if b is None]
    if missing:
        raise NonIsolatedError(
            f"quotient is infinite dimensional (no pure power of {', '.join(missing)} among leading terms): "
            "non-isolated singularity")
    out = []
    for e in itertools.product(*[range(b) for b in bounds]):
        m = pack(e)
        if not any(divides(lm, m, n) for lm in I.leads):
            out.append(e)
    out.sort(key=lambda e: grevlex_key(pack(e), n))
    return out


def socle_degree(I: IdealBasis) -> object:
    """Largest weighted degree of a standard monomial (graded ring)."""
    basis = quotient_basis(I)
    if not basis:
        return None
    return max(I.ring.mono_weight(pack(e)) for e in basis)


def lift_monomial_powers(I: IdealBasis) -> tuple[list[int], list[list[Poly]]]:
    """Minimal N_i with x_i^N_i in I, and C with x_i^N_i = sum_j C_ij gen_j."""
    ring = I.ring
    dim = len(quotient_basis(I))
    Ns, C = [], []
    for i in range(ring.n):
        x = ring.gen(i)
        p = ring.one()
        found = False
        for k in range(0, dim + 1):
            res = normal_form(p, I)
            if not res.remainder:
                Ns.append(k)
                C.append(res.cofactors)
                found = True
                break
            p = p * x
        if not found:
            raise NonIsolatedError(
                f"{ring.variables[i]} is not nilpotent modulo the ideal: its zero set is not the origin alone")
    return Ns, C


# ---------------------------------------------------------------------------
# submodules of free modules (position over term)


class _ModuleGB:
    """Groebner basis of a submodule of R^k; vectors are dicts (pos, mono) -> coeff."""

    def __init__(self, ring: RingSpec, vectors: list[dict]):
        self.ring = ring
        self.n = ring.n
        n = self.n
        cache: dict = {}

        def key(t):
            k = cache.get(t[1])
            if k is None:
                k = cache[t[1]] = grevlex_key(t[1], n)
            return (-t[0], k)

        self.key = key
        self.basis: list[dict] = []
        self.leads: list[tuple] = []
        self._run(vectors)

    def lead(self, v):
        return max(v, key=self.key)

    def _reduce_top(self, v: dict, full_stop_pos: int | None = None):
        n = self.n
        v = dict(v)
        while v:
            lt = self.lead(v)
            pos, m = lt
            if full_stop_pos is not None and pos >= full_stop_pos:
                return v
            c = v[lt]
            for j, (bp, bm) in enumerate(self.leads):
                if bp == pos and divides(bm, m, n):
                    shift = m - bm
                    for (p2, m2), c2 in self.basis[j].items():
                        t = (p2, m2 + shift)
                        val = v.get(t, 0) - c * c2
                        if val:
                            v[t] = val
                        else:
                            v.pop(t, None)
                    break
            else:
                return v
        return v

    def _add(self, v):
        lt = self.lead(v)
        inv = _inv(v[lt])
        v = {t: c * inv for t, c in v.items()}
        self.basis.append(v)
        self.leads.append(lt)

    def _run(self, vectors):
        n = self.n
        pairs = []
        counter = itertools.count()

        def push_pairs(idx):
            pi, mi = self.leads[idx]
            for j in range(idx):
                pj, mj = self.leads[j]
                if pj != pi:
                    continue
                lcm = mono_lcm(mi, mj, n)
                heapq.heappush(pairs, (mono_degree(lcm), next(counter), j, idx, lcm))

        for v in vectors:
            v = {t: c for t, c in v.items() if c}
            if not v:
                continue
            r = self._reduce_top(v)
            if r:
                self._add(r)
                push_pairs(len(self.basis) - 1)
        done = set()
        while pairs:
            _, _, i, j, lcm = heapq.heappop(pairs)
            pos = self.leads[i][0]
            skip = False
            for k in range(len(self.basis)):
                if k in (i, j) or self.leads[k][0] != pos:
                    continue
                if divides(self.leads[k][1], lcm, n) and (min(i, k), max(i, k)) in done and (min(j, k), max(j, k)) in done:
                    skip = True
                    break
            done.add((min(i, j), max(i, j)))
            if skip:
                continue
            si = lcm - self.leads[i][1]
            sj = lcm - self.leads[j][1]
            s = {}
            for (p, m), c in self.basis[i].items():
                s[(p, m + si)] = s.get((p, m + si), 0) + c
            for (p, m), c in self.basis[j].items():
                t = (p, m + sj)
                val = s.get(t, 0) - c
                if val:
                    s[t] = val
                else:
                    s.pop(t, None)
            if not s:
                continue
            r = self._reduce_top(s)
            if r:
                self._add(r)
                push_pairs(len(self.basis) - 1)


def _vec_from_polys(polys: Sequence[Poly], offset: int = 0) -> dict:
    v = {}
    for i, p in enumerate(polys):
        for m, c in p.terms.items():
            v[(i + offset, m)] = c
    return v


def _polys_from_vec(ring: RingSpec, v: dict, start: int, length: int) -> list[Poly]:
    out = [dict() for _ in range(length)]
    for (p, m), c in v.items():
        if start <= p < start + length:
            out[p - start][m] = c
    return [Poly(ring, d) for d in out]


def solve_linear_over_ring(A: Sequence[Sequence[Poly]], b: Sequence[Poly]):
    """A particular solution x of A x = b over the polynomial ring, or None.

    ``A`` is given as a list of rows.  Uses the augmented module basis of the
    columns (c_j, e_j) under position-over-term.
    """
    rows = len(A)
    cols = len(A[0]) if rows else 0
    ring = b[0].ring if b else A[0][0].ring
    if cols == 0:
        return [] if all(not p for p in b) else None
    vectors = []
    for j in range(cols):
        v = {}
        for i in range(rows):
            for m, c in A[i][j].terms.items():
                v[(i, m)] = c
        v[(rows + j, 0)] = ring.field.one()
        vectors.append(v)
    gb = _ModuleGB(ring, vectors)
    target = _vec_from_polys(b)
    r = gb._reduce_top(target, full_stop_pos=rows)
    if r and max(r, key=gb.key)[0] < rows:
        return None
    lower = _polys_from_vec(ring, r, rows, cols)
    x = [-p for p in lower]
    return x


def syzygies(columns: Sequence[Sequence[Poly]], ring: RingSpec) -> list[list[Poly]]:
    """Generators of the module of relations among the given column vectors."""
    cols = len(columns)
    if cols == 0:
        return []
    rows = len(columns[0])
    vectors = []
    for j, col in enumerate(columns):
        v = _vec_from_polys(col)
        v[(rows + j, 0)] = ring.field.one()
        vectors.append(v)
    gb = _ModuleGB(ring, vectors)
    out = []
    for v, (pos, _) in zip(gb.basis, gb.leads):
        if pos >= rows:
            out.append(_polys_from_vec(ring, v, rows, cols))
    return out


def module_basis(vectors: Sequence[Sequence[Poly]], ring: RingSpec) -> "_ModuleGB":
    return _ModuleGB(ring, [_vec_from_polys(v) for v in vectors])


def module_quotient_dimension(vectors: Sequence[Sequence[Poly]], rank: int, ring: RingSpec) -> int:
    """dim_k of R^rank / <vectors>; NonIsolatedError if infinite."""
    gb = module_basis(vectors, ring)
    n = ring.n
    total = 0
    for pos in range(rank):
        leads = [m for (p, m) in gb.leads if p == pos]
        fake = IdealBasis(ring, [], [], [], leads if leads else [])
        if not leads:
            raise NonIsolatedError(f"component {pos} of the quotient module is free: infinite dimension")
        fake.leads = leads
        bounds = _pure_power_bounds(fake)
        if any(b is None for b in bounds):
            raise NonIsolatedError("quotient module is infinite dimensional")
        for e in itertools.product(*[range(b) for b in bounds]):
            m = pack(e)
            if not any(divides(lm, m, n) for lm in leads):
                total += 1
    return total
