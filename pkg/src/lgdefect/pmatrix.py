"""Dense matrices of polynomials stored as lists of rows."""

from __future__ import annotations

from typing import Callable, Sequence

from .poly import Poly, RingSpec, embed

Matrix = list  # list[list[Poly]]


def zeros(ring: RingSpec, rows: int, cols: int) -> Matrix:
    return [[ring.zero() for _ in range(cols)] for _ in range(rows)]


def identity(ring: RingSpec, n: int, scale=1) -> Matrix:
    m = zeros(ring, n, n)
    for i in range(n):
        m[i][i] = ring.const(scale)
    return m


def shape(A: Matrix, cols_hint: int = 0) -> tuple[int, int]:
    return len(A), (len(A[0]) if A else cols_hint)


def matmul(A: Matrix, B: Matrix, ring: RingSpec | None = None) -> Matrix:
    rows = len(A)
    inner = len(B)
    cols = len(B[0]) if B else 0
    if rows and len(A[0]) != inner:
        raise ValueError(f"shape mismatch {len(A)}x{len(A[0])} * {inner}x{cols}")
    if ring is None:
        ring = A[0][0].ring if rows and inner else (B[0][0].ring if inner and cols else None)
    out = []
    for i in range(rows):
        Ai = A[i]
        row = []
        nz = [(k, Ai[k]) for k in range(inner) if Ai[k]]
        for j in range(cols):
            acc = ring.zero()
            for k, a in nz:
                b = B[k][j]
                if b:
                    acc = acc + a * b
            row.append(acc)
        out.append(row)
    return out


def add(A: Matrix, B: Matrix) -> Matrix:
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def sub(A: Matrix, B: Matrix) -> Matrix:
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def neg(A: Matrix) -> Matrix:
    return [[-a for a in r] for r in A]


def scale(A: Matrix, c) -> Matrix:
    return [[a * c for a in r] for r in A]


def transpose(A: Matrix, cols_hint: int = 0) -> Matrix:
    rows, cols = len(A), (len(A[0]) if A else cols_hint)
    return [[A[i][j] for i in range(rows)] for j in range(cols)]


def apply(A: Matrix, fn: Callable[[Poly], Poly]) -> Matrix:
    return [[fn(a) for a in r] for r in A]


def embed_matrix(A: Matrix, ring: RingSpec) -> Matrix:
    return [[embed(a, ring) for a in r] for r in A]


def equal(A: Matrix, B: Matrix) -> bool:
    if len(A) != len(B):
        return False
    for ra, rb in zip(A, B):
        if len(ra) != len(rb):
            return False
        for a, b in zip(ra, rb):
            if a != b:
                return False
    return True


def is_zero(A: Matrix) -> bool:
    return all(not a for r in A for a in r)


def first_difference(A: Matrix, B: Matrix):
    for i, (ra, rb) in enumerate(zip(A, B)):
        for j, (a, b) in enumerate(zip(ra, rb)):
            if a != b:
                return (i, j)
    return None


def is_scalar_identity(A: Matrix, c) -> bool:
    for i, r in enumerate(A):
        for j, a in enumerate(r):
            if i == j:
                if a != c:
                    return False
            elif a:
                return False
    return True


def block(rows: Sequence[Sequence[Matrix]], row_sizes: Sequence[int], col_sizes: Sequence[int],
          ring: RingSpec) -> Matrix:
    """Assemble a block matrix; ``None`` entries are zero blocks."""
    out = []
    for bi, rs in enumerate(row_sizes):
        for i in range(rs):
            row = []
            for bj, cs in enumerate(col_sizes):
                blk = rows[bi][bj]
                if blk is None:
                    row.extend(ring.zero() for _ in range(cs))
                else:
                    row.extend(blk[i][j] for j in range(cs))
            out.append(row)
    return out


def submatrix(A: Matrix, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    return [[A[i][j] for j in cols] for i in rows]


def kron(A: Matrix, B: Matrix) -> Matrix:
    out = []
    for ra in A:
        for rb in B:
            out.append([a * b for a in ra for b in rb])
    return out


def det(A: Matrix, ring: RingSpec) -> Poly:
    """Determinant by cofactor expansion with memoisation on column subsets."""
    n = len(A)
    if n == 0:
        return ring.one()
    memo: dict = {}

    def rec(row: int, cols: tuple) -> Poly:
        if row == n:
            return ring.one()
        key = cols
        hit = memo.get(key)
        if hit is not None:
            return hit
        acc = ring.zero()
        sign = 1
        for idx, c in enumerate(cols):
            a = A[row][c]
            if a:
                rest = cols[:idx] + cols[idx + 1:]
                term = a * rec(row + 1, rest)
                acc = acc + term if sign > 0 else acc - term
            sign = -sign
        memo[key] = acc
        return acc

    return rec(0, tuple(range(n)))


def trace(A: Matrix, ring: RingSpec) -> Poly:
    acc = ring.zero()
    for i in range(len(A)):
        acc = acc + A[i][i]
    return acc


def format_matrix(A: Matrix) -> list[list[str]]:
    return [[str(a) for a in r] for r in A]
