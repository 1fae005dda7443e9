"""Regenerates the worked numbers for the examples as a table of claims.

Each claim is computed from scratch and compared with its expected value by
exact equality.  ``run_report`` is what the ``report`` CLI command prints.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Iterable

from .scalar import format_scalar


@dataclass
class Claim:
    claim: str
    computed: str
    expected: str
    match: bool
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"claim": self.claim, "computed": self.computed, "expected": self.expected,
                "match": self.match}


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    if isinstance(v, (str, bool, int)):
        return str(v)
    if hasattr(v, "ring") and hasattr(v, "terms"):
        return str(v)
    return format_scalar(v)


def _claim(name: str, fn: Callable[[], object], expected, same: Callable | None = None) -> Claim:
    t = time.perf_counter()
    try:
        got = fn()
        ok = same(got, expected) if same else got == expected
        text = _fmt(got)
    except Exception as e:  # a crash is a mismatch, reported in the table
        ok, text = False, f"error: {e}"
    return Claim(name, text, _fmt(expected) if not isinstance(expected, str) else expected,
                 bool(ok), time.perf_counter() - t)


def knorrer_claims(safety: int | None = None) -> list[Claim]:
    from .fusion import fuse
    from .homalg import hom_dimensions
    from .mf import dual, unit_mf
    from .models import knorrer_K
    from .residue import left_dim, right_dim
    from fractions import Fraction
    K = knorrer_K()
    out = [
        _claim("dim_l(K)", lambda: left_dim(K).scalar, Fraction(-1, 2)),
        _claim("dim_r(K)", lambda: right_dim(K).scalar, Fraction(-2)),
    ]

    def fused():
        F = fuse(dual(K), K, safety=safety)
        return hom_dimensions(F, unit_mf(F.ring))

    out.append(_claim("Hom(K^v (x) K, I_0)", fused, (1, 0)))
    return out


def unit_claims() -> list[Claim]:
    from .mf import identity_defect
    from .poly import RingSpec
    from .residue import left_dim, right_dim
    out = []
    for text in ("x^3", "x^4 - y^2", "x^3 + y^4", "x^3 + x*y^3", "x^3 + y^5"):
        W = RingSpec(("x", "y") if "y" in text else ("x",)).parse(text)
        I = identity_defect(W)
        out.append(_claim(f"dim_l(I) for {text}", lambda I=I: left_dim(I).scalar, 1))
        out.append(_claim(f"dim_r(I) for {text}", lambda I=I: right_dim(I).scalar, 1))
    return out


def ad_claims(ds: Iterable[int]) -> list[Claim]:
    from .mf import supertrace
    from .models import ad_defect, ad_supertrace_formula
    from .residue import lambda_product, left_dim, right_dim
    out = []
    for d in ds:
        X = ad_defect(d)

        def st(X=X):
            L = lambda_product(X, X.source_vars + X.target_vars)
            return supertrace(L, X.r0, X.r1, X.ring, 0)

        out.append(_claim(f"A-D d={d}: supertrace", st, ad_supertrace_formula(d)))
        out.append(_claim(f"A-D d={d}: dim_r(X)", lambda X=X: right_dim(X).scalar, 1))
        out.append(_claim(f"A-D d={d}: dim_l(X)", lambda X=X: left_dim(X).scalar, 2))
    return out


def twisted_claims(ds: Iterable[int]) -> list[Claim]:
    from .mf import identity_defect, twist
    from .models import cyclic_action, power_potential
    from .residue import left_dim, right_dim
    out = []
    for d in ds:
        W = power_potential(d)
        I = identity_defect(W)
        G = cyclic_action(d)
        T = twist(G.elements[1], I, on=I.target_vars)
        eta = W.ring.field.zeta()
        out.append(_claim(f"x^{d}: dim_r(_gI)", lambda T=T: right_dim(T).scalar, eta))
        out.append(_claim(f"x^{d}: dim_l(_gI)", lambda T=T: left_dim(T).scalar, 1 / eta))
    return out


def equivariant_claims(ds: Iterable[int]) -> list[Claim]:
    from .models import equivariant_power
    from .orbifold import equivariant_to_module, orbifold_hom
    from .residue import kapustin_li
    out = []
    for d in ds:
        for n in range(1, d):
            E = equivariant_power(d, n)
            X = E.X
            one = X.identity()
            out.append(_claim(f"x^{d}, n={n}: <1_X, 1_X>_X", lambda X=X, one=one: kapustin_li(one, one, X), 0))
            M = equivariant_to_module(E)
            out.append(_claim(f"x^{d}, n={n}: dim End_A(X)",
                              lambda M=M: orbifold_hom(M, M).dims, (1, 0)))
    return out


def a_d_claims(ds: Iterable[int], safety: int | None = None) -> list[Claim]:
    from .orbifold import ad_structure
    out = []
    for d in ds:
        cache = {}

        def rep(d=d, cache=cache):
            if "r" not in cache:
                cache["r"] = ad_structure(d, safety)
            return cache["r"]

        out.append(_claim(f"A_{d}: multiplicity of I", lambda: rep().unit_multiplicity, 1))
        out.append(_claim(f"A_{d}: multiplicity of J", lambda: rep().j_multiplicity, 1))
        out.append(_claim(f"A_{d}: rank(J J) = rank(I)", lambda: rep().square_ranks, _unit_ranks(d)))
        out.append(_claim(f"A_{d}: End(J J) = End(I)", lambda: rep().square_hom, _unit_hom(d)))
        out.append(_claim(f"A_{d}: multiplicity of I in J J", lambda: rep().unit_in_square, 1))
    return out


def _unit_ranks(d):
    from .models import a_identity
    return a_identity(d).ranks


def _unit_hom(d):
    from .homalg import hom_dimensions
    from .models import a_identity
    I = a_identity(d)
    return hom_dimensions(I, I)


def run_report(ds: Iterable[int] = range(2, 7), safety: int | None = None,
               include_ad: bool = False) -> list[Claim]:
    ds = list(ds)
    claims = knorrer_claims(safety) + unit_claims() + ad_claims(ds)
    claims += twisted_claims([d for d in ds if d >= 3] or [3])
    claims += equivariant_claims([d for d in ds if 3 <= d <= 5] or [3])
    if include_ad:
        claims += a_d_claims([d for d in ds if d in (2, 3)], safety)
    return claims
