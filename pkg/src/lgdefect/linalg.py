"""Exact sparse linear algebra over Q or Q(zeta_n).

Vectors are dicts from integer keys to nonzero scalars.  :class:`Echelon`
keeps a basis in echelon form (pivot = largest key) and reduces new vectors
against it, optionally tracking each basis vector as a combination of the
inputs, which gives kernels and particular solutions.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Iterable, Sequence

from gmpy2 import mpq

_MPQ = type(mpq(0))


def _coerce(c):
    if isinstance(c, Fraction):
        return mpq(c.numerator, c.denominator)
    if isinstance(c, int):
        return mpq(c)
    return c


def _inv(c):
    return 1 / c if not isinstance(c, int) else mpq(1, c)


def axpy(v: dict, c, w: dict):
    """v -= c * w in place."""
    for k, x in w.items():
        val = v.get(k)
        if val is None:
            v[k] = -c * x
        else:
            val = val - c * x
            if val:
                v[k] = val
            else:
                del v[k]


class Echelon:
    def __init__(self, track: bool = False):
        self.track = track
        self.rows: dict = {}  # pivot key -> (vector, combo)

    def __len__(self):
        return len(self.rows)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, v: dict, combo: dict | None = None):
        """Fully reduce v; returns (remainder, accumulated combination).

        On return v_in = remainder + sum over used rows of c * row, and the
        returned combination is combo - sum c * combo(row), i.e. the
        combination describing the remainder when ``combo`` describes v_in.
        """
        v = {k: x for k, x in v.items() if x}
        acc = {} if combo is None else dict(combo)
        if not self.rows:
            return v, acc
        heap = [-k for k in v]
        heapq.heapify(heap)
        seen = set()
        while heap:
            k = -heapq.heappop(heap)
            if k in seen:
                continue
            seen.add(k)
            c = v.get(k)
            if c is None:
                continue
            row = self.rows.get(k)
            if row is None:
                continue
            vec, rc = row
            for kk in vec:
                if kk not in v and kk not in seen:
                    heapq.heappush(heap, -kk)
            axpy(v, c, vec)
            if self.track:
                axpy(acc, c, rc)
        return v, acc

    def add(self, v: dict, combo: dict | None = None):
        """Insert v; returns the reduced vector and its combination (None if dependent)."""
        r, acc = self.reduce(v, combo)
        if not r:
            return None, acc
        p = max(r)
        inv = _inv(r[p])
        r = {k: x * inv for k, x in r.items()}
        acc = {k: x * inv for k, x in acc.items()} if self.track else acc
        # keep rows reduced w.r.t. the new pivot
        for q, (vec, rc) in list(self.rows.items()):
            c = vec.get(p)
            if c:
                axpy(vec, c, r)
                if self.track:
                    axpy(rc, c, acc)
        self.rows[p] = (r, acc)
        return r, acc

    def contains(self, v: dict) -> bool:
        return not self.reduce(v)[0]


def rank_of_columns(columns: Iterable[dict]) -> int:
    e = Echelon()
    for col in columns:
        e.add(col)
    return e.rank


def kernel(columns: Sequence[dict]) -> list[dict]:
    """Basis of {x : sum_j x_j col_j = 0}, as dicts j -> coefficient."""
    e = Echelon(track=True)
    out = []
    for j, col in enumerate(columns):
        r, acc = e.add(col, {j: mpq(1)})
        if r is None:
            # col_j = sum (stored rows) ... acc tracks col_j - reduction
            out.append(acc)
    return out


def solve_columns(columns: Sequence[dict], b: dict):
    """x with sum_j x_j col_j = b, or None."""
    e = Echelon(track=True)
    for j, col in enumerate(columns):
        e.add(col, {j: mpq(1)})
    r, acc = e.reduce(b, {})
    if r:
        return None
    # b - sum c_k row_k = 0 and acc = -sum c_k combo_k
    return {k: -x for k, x in acc.items() if x}


def solve_dense(rows: Sequence[Sequence], rhs: Sequence, unique: bool = False):
    """Solve a dense system; returns a list of Fractions, or None."""
    m = len(rows)
    n = len(rows[0]) if rows else 0
    cols = []
    for j in range(n):
        cols.append({i: _coerce(rows[i][j]) for i in range(m) if rows[i][j]})
    b = {i: _coerce(rhs[i]) for i in range(m) if rhs[i]}
    x = solve_columns(cols, b)
    if x is None:
        return None
    if unique and len(kernel(cols)) > 0:
        return None
    out = []
    for j in range(n):
        v = x.get(j, 0)
        out.append(Fraction(int(mpq(v).numerator), int(mpq(v).denominator)) if not hasattr(v, "n") else v)
    return out


def det_scalar(M: Sequence[Sequence]):
    """Determinant of a square scalar matrix by Gaussian elimination."""
    n = len(M)
    A = [[_coerce(x) for x in row] for row in M]
    det = mpq(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c]), None)
        if piv is None:
            return mpq(0)
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        p = A[c][c]
        det = det * p
        inv = _inv(p)
        for r in range(c + 1, n):
            f = A[r][c]
            if f:
                f = f * inv
                for k in range(c, n):
                    A[r][k] = A[r][k] - f * A[c][k]
    return det


def inverse_scalar(M: Sequence[Sequence]):
    """Inverse of a square scalar matrix, or None if singular."""
    n = len(M)
    A = [[_coerce(x) for x in row] + [mpq(1) if i == j else mpq(0) for j in range(n)]
         for i, row in enumerate(M)]
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c]), None)
        if piv is None:
            return None
        A[c], A[piv] = A[piv], A[c]
        inv = _inv(A[c][c])
        A[c] = [x * inv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]
