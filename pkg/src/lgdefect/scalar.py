"""Exact coefficient fields: the rationals and cyclotomic fields Q(zeta_n).

Rationals are plain ``gmpy2.mpq`` values.  Elements of Q(zeta_n) are
:class:`Cyclo` instances holding a coefficient vector on the power basis
``1, z, ..., z^(phi(n)-1)`` reduced modulo the n-th cyclotomic polynomial.
Both kinds mix freely under ``+ - * /``; a rational is the constant element
of any cyclotomic field.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from gmpy2 import mpq

from .textparse import parse_expression


class FieldMismatchError(ValueError):
    """Raised when two scalars from different cyclotomic fields meet."""

    def __init__(self, a, b):
        self.specs = (a, b)
        super().__init__(f"field mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# cyclotomic polynomials

def _int_poly_divmod(num: list[int], den: list[int]) -> tuple[list[int], list[int]]:
    num = list(num)
    q = [0] * max(1, len(num) - len(den) + 1)
    lead = den[-1]
    for k in range(len(num) - len(den), -1, -1):
        c = num[k + len(den) - 1]
        if c == 0:
            continue
        assert c % lead == 0
        c //= lead
        q[k] = c
        for j, dj in enumerate(den):
            num[k + j] -= c * dj
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    return q, num


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_n, lowest degree first."""
    if n < 1:
        raise ValueError("cyclotomic order must be positive")
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly, rem = _int_poly_divmod(poly, list(cyclotomic_polynomial(d)))
            assert rem == [0]
    return tuple(poly)


@lru_cache(maxsize=None)
def _reduction_table(n: int) -> tuple[tuple[mpq, ...], ...]:
    """Rows t^k mod Phi_n for k = 0 .. 2*phi - 2."""
    phi_poly = cyclotomic_polynomial(n)
    m = len(phi_poly) - 1
    rows = []
    cur = [mpq(0)] * m
    cur[0] = mpq(1)
    for k in range(max(1, 2 * m - 1)):
        rows.append(tuple(cur))
        # multiply by t and reduce t^m = -sum phi_j t^j
        top = cur[-1]
        cur = [mpq(0)] + cur[:-1]
        if top:
            for j in range(m):
                cur[j] -= top * phi_poly[j]
    return tuple(rows)


def _euler_phi(n: int) -> int:
    return len(cyclotomic_polynomial(n)) - 1


# ---------------------------------------------------------------------------
# field elements

class Cyclo:
    """Element of Q(zeta_n) in the power basis modulo Phi_n."""

    __slots__ = ("n", "c")

    def __init__(self, n: int, coeffs):
        m = _euler_phi(n)
        coeffs = [mpq(x) for x in coeffs]
        if len(coeffs) > m:
            phi_poly = [mpq(c) for c in cyclotomic_polynomial(n)]
            _, coeffs = _qpoly_divmod(_trim(coeffs), phi_poly)
            coeffs = coeffs + [mpq(0)] * (m - len(coeffs))
        else:
            coeffs = coeffs + [mpq(0)] * (m - len(coeffs))
        self.n = n
        self.c = tuple(coeffs)

    @classmethod
    def _raw(cls, n, c):
        obj = object.__new__(cls)
        obj.n = n
        obj.c = c
        return obj

    # conversions ---------------------------------------------------------
    def is_rational(self) -> bool:
        return not any(self.c[1:])

    def rational_part(self) -> mpq:
        return self.c[0]

    def _coerce(self, other):
        if isinstance(other, Cyclo):
            if other.n != self.n:
                raise FieldMismatchError(FieldSpec.cyclotomic(self.n), FieldSpec.cyclotomic(other.n))
            return other
        if isinstance(other, (int, type(mpq(0)))):
            m = len(self.c)
            return Cyclo._raw(self.n, (mpq(other),) + (mpq(0),) * (m - 1))
        return None

    # arithmetic ----------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Cyclo._raw(self.n, tuple(a + b for a, b in zip(self.c, o.c)))

    __radd__ = __add__

    def __neg__(self):
        return Cyclo._raw(self.n, tuple(-a for a in self.c))

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Cyclo._raw(self.n, tuple(a - b for a, b in zip(self.c, o.c)))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, type(mpq(0)))):
            return Cyclo._raw(self.n, tuple(a * other for a in self.c))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        m = len(self.c)
        if m == 1:
            return Cyclo._raw(self.n, (self.c[0] * o.c[0],))
        prod = [mpq(0)] * (2 * m - 1)
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(o.c):
                    if b:
                        prod[i + j] += a * b
        table = _reduction_table(self.n)
        out = list(prod[:m])
        for k in range(m, 2 * m - 1):
            a = prod[k]
            if a:
                row = table[k]
                for j in range(m):
                    if row[j]:
                        out[j] += a * row[j]
        return Cyclo._raw(self.n, tuple(out))

    __rmul__ = __mul__

    def inverse(self) -> "Cyclo":
        if not self:
            raise ZeroDivisionError("inverse of zero in Q(zeta_%d)" % self.n)
        if self.is_rational():
            return Cyclo(self.n, [1 / self.c[0]])
        # extended Euclid in Q[t]: find s with s * a = 1 mod Phi_n
        a = list(self.c)
        b = [mpq(c) for c in cyclotomic_polynomial(self.n)]
        s0, s1 = [mpq(1)], [mpq(0)]
        r0, r1 = _trim(a), _trim(b)
        while len(r1) > 1 or r1[0]:
            q, r = _qpoly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _qpoly_sub(s0, _qpoly_mul(q, s1))
        assert len(r0) == 1 and r0[0]
        inv = [x / r0[0] for x in s0]
        return Cyclo(self.n, inv)

    def __truediv__(self, other):
        if isinstance(other, (int, type(mpq(0)))):
            if not other:
                raise ZeroDivisionError("division by zero")
            return Cyclo._raw(self.n, tuple(a / other for a in self.c))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = Cyclo(self.n, [1])
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # comparison ----------------------------------------------------------
    def __bool__(self):
        return any(self.c)

    def __eq__(self, other):
        if isinstance(other, Cyclo):
            return self.n == other.n and self.c == other.c
        if isinstance(other, (int, type(mpq(0)))):
            return self.is_rational() and self.c[0] == other
        return NotImplemented

    def __hash__(self):
        if self.is_rational():
            return hash(self.c[0])
        return hash((self.n, self.c))

    def __repr__(self):
        return f"Cyclo({self.n}, {format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


def _trim(p):
    p = list(p)
    while len(p) > 1 and not p[-1]:
        p.pop()
    return p


def _qpoly_mul(a, b):
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _qpoly_sub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [mpq(0)] * (n - len(a))
    b = list(b) + [mpq(0)] * (n - len(b))
    return _trim([x - y for x, y in zip(a, b)])


def _qpoly_divmod(a, b):
    a = list(a)
    q = [mpq(0)] * max(1, len(a) - len(b) + 1)
    lead = b[-1]
    for k in range(len(a) - len(b), -1, -1):
        c = a[k + len(b) - 1] / lead
        q[k] = c
        if c:
            for j, bj in enumerate(b):
                a[k + j] -= c * bj
    return _trim(q), _trim(a[: max(1, len(b) - 1)])


def _zeta_rational(n):
    return 1 if n == 1 else -1


Scalar = Union[mpq, Cyclo]
_MPQ = type(mpq(0))


# ---------------------------------------------------------------------------
# field specs

@dataclass(frozen=True)
class FieldSpec:
    """Either the rationals or the cyclotomic field of a given order."""

    kind: str = "rationals"
    order: int | None = None

    def __post_init__(self):
        if self.kind == "rationals":
            if self.order is not None:
                raise ValueError("the rationals take no order")
        elif self.kind == "cyclotomic":
            if not isinstance(self.order, int) or self.order < 1:
                raise ValueError("cyclotomic order must be a positive integer")
        else:
            raise ValueError(f"unknown field kind {self.kind!r}")

    @staticmethod
    def rationals() -> "FieldSpec":
        return FieldSpec("rationals")

    @staticmethod
    def cyclotomic(n: int) -> "FieldSpec":
        return FieldSpec("cyclotomic", n)

    @property
    def is_cyclotomic(self) -> bool:
        return self.kind == "cyclotomic"

    def zero(self) -> Scalar:
        return self.coerce(0)

    def one(self) -> Scalar:
        return self.coerce(1)

    def zeta(self) -> Scalar:
        """The primitive root exp(2 pi i / n) (or 1 for the rationals)."""
        if not self.is_cyclotomic:
            return mpq(1)
        n = self.order
        if _euler_phi(n) == 1:
            return Cyclo(n, [_zeta_rational(n)])
        return Cyclo(n, [0, 1])

    def coerce(self, x) -> Scalar:
        if isinstance(x, Cyclo):
            if not self.is_cyclotomic:
                if x.is_rational():
                    return x.c[0]
                raise FieldMismatchError(self, FieldSpec.cyclotomic(x.n))
            if x.n != self.order:
                raise FieldMismatchError(self, FieldSpec.cyclotomic(x.n))
            return x
        q = mpq(x)
        if self.is_cyclotomic:
            return Cyclo(self.order, [q])
        return q

    def contains(self, x) -> bool:
        if isinstance(x, Cyclo):
            return self.is_cyclotomic and x.n == self.order
        return isinstance(x, (int, _MPQ))

    def parse(self, text: str) -> Scalar:
        """Parse scalar text such as ``-3/4`` or ``1/2*z^2 - z + 3``."""

        def ident(name):
            if name == "z" and self.is_cyclotomic:
                return self.zeta()
            raise KeyError(name)

        val = parse_expression(text, ident, lambda k: self.coerce(k))
        return self.coerce(val)

    def format(self, x) -> str:
        return format_scalar(self.coerce(x))

    def __str__(self):
        return "QQ" if not self.is_cyclotomic else f"QQ(z{self.order})"


_FIELD_RE = re.compile(
    r"^\s*(?:(?P<q>q|qq|rationals|rational)|(?:(?:q|qq)\s*\(\s*(?:z|zeta)_?(?P<n1>\d+)\s*\)|(?:cyclotomic|cyc)[:_ ]?(?P<n2>\d+)))\s*$",
    re.IGNORECASE,
)


def parse_field(text: str) -> FieldSpec:
    """Accepts ``QQ``, ``rationals``, ``QQ(z5)``, ``cyclotomic:5`` and the like."""
    m = _FIELD_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse field {text!r}")
    if m.group("q"):
        return FieldSpec.rationals()
    return FieldSpec.cyclotomic(int(m.group("n1") or m.group("n2")))


def field_of(x) -> FieldSpec:
    if isinstance(x, Cyclo):
        return FieldSpec.cyclotomic(x.n)
    return FieldSpec.rationals()


def join_fields(a: FieldSpec, b: FieldSpec) -> FieldSpec:
    if a == b or not b.is_cyclotomic:
        return a
    if not a.is_cyclotomic:
        return b
    raise FieldMismatchError(a, b)


# ---------------------------------------------------------------------------
# public operations

def arith(a: Scalar, b: Scalar, op: str) -> Scalar:
    """Exact field operation ``op`` in {add, sub, mul}."""
    fa, fb = field_of(a), field_of(b)
    if fa.is_cyclotomic and fb.is_cyclotomic and fa != fb:
        raise FieldMismatchError(fa, fb)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def invert(a: Scalar) -> Scalar:
    if isinstance(a, Cyclo):
        return a.inverse()
    if not a:
        raise ZeroDivisionError("inverse of zero")
    return 1 / mpq(a)


def canonicalize(a: Scalar) -> Scalar:
    if isinstance(a, Cyclo):
        return Cyclo(a.n, a.c)
    return mpq(a)


def _format_rational(q) -> str:
    q = mpq(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_scalar(a: Scalar) -> str:
    if not isinstance(a, Cyclo):
        return _format_rational(a)
    parts = []
    for k in range(len(a.c) - 1, -1, -1):
        c = a.c[k]
        if not c:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        if k == 0:
            body = _format_rational(mag)
        else:
            mono = "z" if k == 1 else f"z^{k}"
            body = mono if mag == 1 else f"{_format_rational(mag)}*{mono}"
        parts.append((sign, body))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def is_scalar_one(a) -> bool:
    return a == 1


def zeta_power(field: FieldSpec, k: int) -> Scalar:
    """zeta_n ** k in the given cyclotomic field."""
    if not field.is_cyclotomic:
        raise ValueError("zeta powers need a cyclotomic field")
    n = field.order
    return field.zeta() ** (k % n)
