"""Sparse multivariate polynomials over Q or Q(zeta_n).

Monomials are packed into a single Python int, 16 bits per variable with the
top bit of each field reserved as a guard, so monomial multiplication is an
integer addition and divisibility is one subtraction and a mask.  Exponents
must stay below 2**15.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from gmpy2 import mpq

from .scalar import Cyclo, FieldSpec, format_scalar, join_fields
from .textparse import parse_expression

BITS = 16
FIELD_MASK = (1 << BITS) - 1
_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*'*$")
_MPQ = type(mpq(0))


class RingMismatchError(ValueError):
    pass


class DivisionRemainderError(ArithmeticError):
    """Raised by :func:`exact_divide` when the division leaves a remainder."""

    def __init__(self, quotient: "Poly", remainder: "Poly"):
        self.quotient = quotient
        self.remainder = remainder
        super().__init__(f"division is not exact, remainder {remainder}")


@lru_cache(maxsize=None)
def _guard(n: int) -> int:
    g = 0
    for i in range(n):
        g |= 1 << (BITS * i + BITS - 1)
    return g


def pack(exps: Iterable[int]) -> int:
    m = 0
    for i, e in enumerate(exps):
        if e < 0 or e >= 1 << (BITS - 1):
            raise OverflowError(f"exponent {e} out of range")
        m |= e << (BITS * i)
    return m


def unpack(m: int, n: int) -> tuple[int, ...]:
    return tuple((m >> (BITS * i)) & FIELD_MASK for i in range(n))


def divides(a: int, b: int, n: int) -> bool:
    """Monomial a divides monomial b (packed, n variables)."""
    g = _guard(n)
    return ((b | g) - a) & g == g


def mono_degree(m: int) -> int:
    d = 0
    while m:
        d += m & FIELD_MASK
        m >>= BITS
    return d


def grevlex_key(m: int, n: int) -> tuple:
    e = unpack(m, n)
    return (sum(e),) + tuple(-x for x in reversed(e))


def mono_lcm(a: int, b: int, n: int) -> int:
    out = 0
    for i in range(n):
        sh = BITS * i
        x = (a >> sh) & FIELD_MASK
        y = (b >> sh) & FIELD_MASK
        out |= max(x, y) << sh
    return out


@dataclass(frozen=True)
class RingSpec:
    """Polynomial ring k[x_1..x_n] with optional positive rational weights."""

    variables: tuple[str, ...]
    degrees: tuple | None = None
    field: FieldSpec = field(default_factory=FieldSpec.rationals)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(set(self.variables)) != len(self.variables):
            raise ValueError(f"duplicate variable names in {self.variables}")
        for v in self.variables:
            if not _NAME_RE.match(v):
                raise ValueError(f"bad variable name {v!r}")
        if self.degrees is not None:
            degs = tuple(Fraction(d) for d in self.degrees)
            if len(degs) != len(self.variables):
                raise ValueError("degree list does not match the variables")
            if any(d <= 0 for d in degs):
                raise ValueError("variable degrees must be positive")
            object.__setattr__(self, "degrees", degs)

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def graded(self) -> bool:
        return self.degrees is not None

    def index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise KeyError(name) from None

    def gen(self, name: str | int) -> "Poly":
        i = name if isinstance(name, int) else self.index(name)
        return Poly(self, {1 << (BITS * i): self.field.one()})

    def gens(self) -> list["Poly"]:
        return [self.gen(i) for i in range(self.n)]

    def zero(self) -> "Poly":
        return Poly(self, {})

    def one(self) -> "Poly":
        return Poly(self, {0: self.field.one()})

    def const(self, c) -> "Poly":
        c = self.field.coerce(c) if not isinstance(c, Cyclo) else c
        return Poly(self, {0: c} if c else {})

    def monomial(self, exps, coeff=1) -> "Poly":
        return Poly(self, {pack(exps): coeff}) if coeff else self.zero()

    def degree_of(self, name: str):
        if self.degrees is None:
            raise ValueError("ungraded ring")
        return self.degrees[self.index(name)]

    def mono_weight(self, m: int) -> Fraction:
        if self.degrees is None:
            raise ValueError("ungraded ring")
        e = unpack(m, self.n)
        return sum((Fraction(a) * w for a, w in zip(e, self.degrees) if a), Fraction(0))

    def with_field(self, fld: FieldSpec) -> "RingSpec":
        return RingSpec(self.variables, self.degrees, fld)

    def ungraded(self) -> "RingSpec":
        return RingSpec(self.variables, None, self.field)

    def sub(self, names: Iterable[str]) -> "RingSpec":
        names = [v for v in names]
        degs = None if self.degrees is None else tuple(self.degrees[self.index(v)] for v in names)
        return RingSpec(tuple(names), degs, self.field)

    def union(self, other: "RingSpec") -> "RingSpec":
        """Ring on the variables of self followed by the new ones of other."""
        names = list(self.variables)
        degs = list(self.degrees) if self.degrees is not None else None
        for i, v in enumerate(other.variables):
            if v in names:
                if degs is not None and other.degrees is not None:
                    if degs[names.index(v)] != other.degrees[i]:
                        raise ValueError(f"conflicting degrees for {v}")
                continue
            names.append(v)
            if degs is not None:
                degs = None if other.degrees is None else degs + [other.degrees[i]]
        if self.degrees is None or other.degrees is None:
            degs = None
        return RingSpec(tuple(names), None if degs is None else tuple(degs), join_fields(self.field, other.field))

    def parse(self, text: str) -> "Poly":
        return parse_poly(text, self)

    def __str__(self):
        fld = str(self.field)
        if self.degrees is None:
            return f"{fld}[{', '.join(self.variables)}]"
        parts = [f"{v}:{_fmt_frac(d)}" for v, d in zip(self.variables, self.degrees)]
        return f"{fld}[{', '.join(parts)}]"


def _fmt_frac(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _is_number(c) -> bool:
    return isinstance(c, (int, _MPQ, Cyclo, Fraction))


def _num(c):
    if isinstance(c, Fraction):
        return mpq(c.numerator, c.denominator)
    return c


class Poly:
    """A polynomial: ring plus a dict from packed monomial to nonzero scalar."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: RingSpec, terms: dict | None = None):
        self.ring = ring
        self.terms = terms if terms is not None else {}

    # construction helpers ------------------------------------------------
    @staticmethod
    def from_dict(ring: RingSpec, data: Mapping[tuple, object]) -> "Poly":
        terms = {}
        for exps, c in data.items():
            if c:
                m = pack(exps)
                terms[m] = terms.get(m, 0) + _num(c)
                if not terms[m]:
                    del terms[m]
        return Poly(ring, terms)

    def exponent_dict(self) -> dict[tuple, object]:
        n = self.ring.n
        return {unpack(m, n): c for m, c in self.terms.items()}

    def copy(self) -> "Poly":
        return Poly(self.ring, dict(self.terms))

    # predicates ------------------------------------------------------------
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and 0 in self.terms)

    def constant_term(self):
        return self.terms.get(0, self.ring.field.zero())

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __len__(self):
        return len(self.terms)

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "Poly"):
        if other.ring.variables != self.ring.variables:
            raise RingMismatchError(f"ring mismatch: {self.ring} vs {other.ring}")

    def _lift(self, other):
        if isinstance(other, Poly):
            self._check(other)
            return other
        if _is_number(other):
            other = _num(other)
            return Poly(self.ring, {0: other} if other else {})
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if len(o.terms) > len(self.terms):
            big, small = o, self
        else:
            big, small = self, o
        res = dict(big.terms)
        for m, c in small.terms.items():
            v = res.get(m)
            if v is None:
                res[m] = c
            else:
                v = v + c
                if v:
                    res[m] = v
                else:
                    del res[m]
        return Poly(self.ring, res)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.ring, {m: -c for m, c in self.terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        res = dict(self.terms)
        for m, c in o.terms.items():
            v = res.get(m)
            if v is None:
                res[m] = -c
            else:
                v = v - c
                if v:
                    res[m] = v
                else:
                    del res[m]
        return Poly(self.ring, res)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def scale(self, c) -> "Poly":
        if not c:
            return Poly(self.ring, {})
        if c == 1:
            return self
        return Poly(self.ring, {m: v * c for m, v in self.terms.items()})

    def mul_term(self, mono: int, c) -> "Poly":
        return Poly(self.ring, {m + mono: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Poly):
            self._check(other)
            a, b = self.terms, other.terms
            if not a or not b:
                return Poly(self.ring, {})
            if len(a) < len(b):
                a, b = b, a
            if len(b) == 1:
                (mb, cb), = b.items()
                if cb == 1:
                    return Poly(self.ring, {m + mb: c for m, c in a.items()})
                return Poly(self.ring, {m + mb: c * cb for m, c in a.items()})
            res: dict = {}
            get = res.get
            for mb, cb in b.items():
                for ma, ca in a.items():
                    m = ma + mb
                    v = get(m)
                    if v is None:
                        res[m] = ca * cb
                    else:
                        res[m] = v + ca * cb
            return Poly(self.ring, {m: c for m, c in res.items() if c})
        if _is_number(other):
            return self.scale(_num(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Poly):
            if other.is_constant() and other:
                return self.scale(1 / _as_field(other.constant_term()))
            return exact_divide(self, other)
        if _is_number(other):
            if not other:
                raise ZeroDivisionError("division by zero")
            return self.scale(1 / _as_field(_num(other)))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = self.ring.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.ring.variables == other.ring.variables and self.terms == other.terms
        if _is_number(other):
            other = _num(other)
            if not other:
                return not self.terms
            return len(self.terms) == 1 and self.terms.get(0) == other
        return NotImplemented

    def __hash__(self):
        return hash((self.ring.variables, frozenset(self.terms.items())))

    # structure ----------------------------------------------------------
    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(mono_degree(m) for m in self.terms)

    def min_degree(self) -> int:
        if not self.terms:
            return -1
        return min(mono_degree(m) for m in self.terms)

    def leading_monomial(self) -> int:
        n = self.ring.n
        return max(self.terms, key=lambda m: grevlex_key(m, n))

    def leading_term(self) -> tuple[int, object]:
        m = self.leading_monomial()
        return m, self.terms[m]

    def sorted_terms(self) -> list[tuple[int, object]]:
        n = self.ring.n
        return sorted(self.terms.items(), key=lambda t: grevlex_key(t[0], n), reverse=True)

    def variables_used(self) -> set[str]:
        n = self.ring.n
        used = set()
        acc = 0
        for m in self.terms:
            acc |= m
        for i in range(n):
            if (acc >> (BITS * i)) & FIELD_MASK:
                used.add(self.ring.variables[i])
        return used

    def degree_in(self, name: str) -> int:
        i = self.ring.index(name)
        if not self.terms:
            return -1
        return max((m >> (BITS * i)) & FIELD_MASK for m in self.terms)

    def weighted_degrees(self) -> set:
        return {self.ring.mono_weight(m) for m in self.terms}

    def map_coefficients(self, fn) -> "Poly":
        res = {}
        for m, c in self.terms.items():
            v = fn(c)
            if v:
                res[m] = v
        return Poly(self.ring, res)

    def coefficient(self, exps) -> object:
        return self.terms.get(pack(exps), self.ring.field.zero())

    def __repr__(self):
        return f"Poly({format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)


def _as_field(c):
    if isinstance(c, (Cyclo, _MPQ)):
        return c
    return mpq(c)


# ---------------------------------------------------------------------------
# public operations


def poly_arith(f: Poly, g: Poly, op: str) -> Poly:
    if f.ring.variables != g.ring.variables:
        raise RingMismatchError(f"ring mismatch: {f.ring} vs {g.ring}")
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    raise ValueError(f"unknown operation {op!r}")


def partial_derivative(f: Poly, i: int | str) -> Poly:
    if isinstance(i, str):
        i = f.ring.index(i)
    if not 0 <= i < f.ring.n:
        raise IndexError(f"variable index {i} out of range")
    sh = BITS * i
    one = 1 << sh
    res = {}
    for m, c in f.terms.items():
        e = (m >> sh) & FIELD_MASK
        if e:
            res[m - one] = c * e
    return Poly(f.ring, res)


def exact_divide(f: Poly, g: Poly) -> Poly:
    """Quotient q with q*g == f; raises DivisionRemainderError otherwise."""
    if not g:
        raise ZeroDivisionError("division by the zero polynomial")
    f._check(g)
    n = f.ring.n
    lm, lc = g.leading_term()
    inv = 1 / _as_field(lc)
    rem = f.copy()
    q = {}
    stuck = {}
    while rem.terms:
        m = max(rem.terms, key=lambda t: grevlex_key(t, n))
        c = rem.terms[m]
        if divides(lm, m, n):
            qm = m - lm
            qc = c * inv
            q[qm] = q.get(qm, 0) + qc
            rem = rem - g.mul_term(qm, qc)
        else:
            stuck[m] = c
            del rem.terms[m]
    quotient = Poly(f.ring, {m: c for m, c in q.items() if c})
    if stuck:
        raise DivisionRemainderError(quotient, Poly(f.ring, stuck))
    return quotient


def rename(f: Poly, mapping: Mapping[str, str], target: RingSpec) -> Poly:
    """Send each variable of f to a variable of ``target`` by name.

    Variables absent from ``mapping`` keep their own name.
    """
    src = f.ring
    if src.variables == target.variables and not mapping:
        return Poly(target, dict(f.terms))
    idx = []
    for v in src.variables:
        w = mapping.get(v, v)
        try:
            idx.append(target.index(w))
        except KeyError:
            idx.append(None)
    n = src.n
    res: dict = {}
    for m, c in f.terms.items():
        out = 0
        for i in range(n):
            e = (m >> (BITS * i)) & FIELD_MASK
            if e:
                j = idx[i]
                if j is None:
                    raise KeyError(f"variable {src.variables[i]} has no image in {target}")
                out += e << (BITS * j)
        v = res.get(out)
        res[out] = c if v is None else v + c
    return Poly(target, {m: c for m, c in res.items() if c})


def embed(f: Poly, target: RingSpec) -> Poly:
    """View f inside a ring containing all its variables (by name)."""
    return rename(f, {}, target)


def substitute(f: Poly, images: Mapping[str, Poly], target: RingSpec | None = None) -> Poly:
    """Ring homomorphism sending each variable to its image.

    Variables missing from ``images`` are sent to the variable of the same
    name in the target ring; if the target lacks it a KeyError is raised.
    """
    if target is None:
        rings = {id(p.ring): p.ring for p in images.values()}
        if not rings:
            target = f.ring
        else:
            target = next(iter(rings.values()))
    src = f.ring
    n = src.n
    gens = []
    for v in src.variables:
        if v in images:
            img = images[v]
            if img.ring.variables != target.variables:
                img = embed(img, target)
            gens.append(img)
        elif v in target.variables:
            gens.append(target.gen(v))
        else:
            gens.append(None)
    power_cache: dict = {}

    def power(i, e):
        key = (i, e)
        p = power_cache.get(key)
        if p is None:
            if gens[i] is None:
                raise KeyError(f"missing image for variable {src.variables[i]}")
            p = gens[i] ** e
            power_cache[key] = p
        return p

    acc: dict = {}
    for m, c in f.terms.items():
        term = None
        for i in range(n):
            e = (m >> (BITS * i)) & FIELD_MASK
            if e:
                p = power(i, e)
                term = p if term is None else term * p
        if term is None:
            acc[0] = acc.get(0, 0) + c
        else:
            for tm, tc in term.terms.items():
                acc[tm] = acc.get(tm, 0) + tc * c
    return Poly(target, {m: c for m, c in acc.items() if c})


def homogeneity(f: Poly):
    """The common weighted degree of all terms of f, or None."""
    if not f.ring.graded:
        raise ValueError("homogeneity needs a graded ring")
    degs = f.weighted_degrees()
    if len(degs) != 1:
        return None
    return degs.pop()


def prime_name(name: str, k: int = 1) -> str:
    return name + "'" * k


def doubled_ring(ring: RingSpec, primes: int = 1) -> RingSpec:
    """R^e = k[x, x'] with the targets first and the primed sources after."""
    names = tuple(ring.variables) + tuple(prime_name(v, primes) for v in ring.variables)
    degs = None if ring.degrees is None else tuple(ring.degrees) * 2
    return RingSpec(names, degs, ring.field)


def divided_difference(W: Poly, i: int | str, target: RingSpec | None = None,
                       primed: Mapping[str, str] | None = None) -> Poly:
    """The telescoping quotient of W over (x_i - x'_i) in R^e.

    The numerator is W(x'_1..x'_{i-1}, x_i, .., x_n) - W(x'_1..x'_i, x_{i+1}, .., x_n).
    ``i`` counts from 0 here.
    """
    ring = W.ring
    if isinstance(i, str):
        i = ring.index(i)
    if primed is None:
        primed = {v: prime_name(v) for v in ring.variables}
    if target is None:
        target = doubled_ring(ring)
    names = ring.variables
    left = {names[j]: primed[names[j]] for j in range(i)}
    right = {names[j]: primed[names[j]] for j in range(i + 1)}
    num = rename(W, left, target) - rename(W, right, target)
    den = target.gen(names[i]) - target.gen(primed[names[i]])
    return exact_divide(num, den)


def jacobian_generators(W: Poly, variables: Iterable[str] | None = None) -> list[Poly]:
    if variables is None:
        variables = W.ring.variables
    return [partial_derivative(W, v) for v in variables]


# ---------------------------------------------------------------------------
# text format


def _format_coeff(c) -> str:
    if isinstance(c, Cyclo) and not c.is_rational():
        return f"[{format_scalar(c)}]"
    if isinstance(c, Cyclo):
        c = c.c[0]
    return format_scalar(c)


def format_poly(f: Poly) -> str:
    if not f.terms:
        return "0"
    n = f.ring.n
    names = f.ring.variables
    out = []
    for m, c in f.sorted_terms():
        e = unpack(m, n)
        factors = []
        for v, k in zip(names, e):
            if k == 1:
                factors.append(v)
            elif k > 1:
                factors.append(f"{v}^{k}")
        mono = "*".join(factors)
        neg = False
        if not (isinstance(c, Cyclo) and not c.is_rational()):
            cr = c.c[0] if isinstance(c, Cyclo) else c
            if cr < 0:
                neg = True
                c = -cr
            else:
                c = cr
        if mono and c == 1:
            body = mono
        elif mono:
            body = f"{_format_coeff(c)}*{mono}"
        else:
            body = _format_coeff(c)
        out.append(("-" if neg else "+", body))
    text = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        text += f" {sign} {body}"
    return text


def parse_poly(text: str, ring: RingSpec) -> Poly:
    fld = ring.field

    def ident(name):
        if name in ring.variables:
            return ring.gen(name)
        if name == "z" and fld.is_cyclotomic:
            return ring.const(fld.zeta())
        raise KeyError(name)

    def bracket_ident(name):
        if name == "z" and fld.is_cyclotomic:
            return ring.const(fld.zeta())
        raise KeyError(name)

    val = parse_expression(text, ident, lambda k: ring.const(k), bracket_ident)
    if not isinstance(val, Poly):
        val = ring.const(val)
    return val


def normalize_coefficients(f: Poly) -> Poly:
    """Coerce every coefficient into the ring's field representation."""
    fld = f.ring.field
    return Poly(f.ring, {m: fld.coerce(c) for m, c in f.terms.items()})
