"""Grothendieck residues and the quantities built from them.

Residues are computed by the transformation law: the denominators f_i are
replaced by pure powers x_i^N_i = sum_j C_ij f_j, and then

    Res[phi dx / f] = coefficient of x^(N-1) in det(C) * phi.

Variables not integrated over (spectators) ride along as coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

from . import pmatrix as pm
from .groebner import (IdealBasis, NonIsolatedError, buchberger, lift_monomial_powers, quotient_basis,
                       reduce_mod)
from .mf import MF, MFError, Morphism, supertrace
from .poly import BITS, FIELD_MASK, Poly, RingSpec, embed, partial_derivative, unpack
from .scalar import format_scalar


class ResidueError(ValueError):
    """Denominators are not admissible for the requested residue."""


# ---------------------------------------------------------------------------
# rings and ideals


def restrict(f: Poly, names: Sequence[str]) -> Poly:
    """f viewed in the subring on ``names`` (f must only involve those)."""
    ring = f.ring.sub(names)
    return embed(f, ring)


@dataclass
class JacobiRing:
    potential: Poly
    ideal: IdealBasis
    basis: list  # exponent tuples

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def ring(self) -> RingSpec:
        return self.ideal.ring

    def monomials(self) -> list[Poly]:
        return [self.ring.monomial(e) for e in self.basis]

    def reduce(self, f: Poly) -> Poly:
        if f.ring.variables != self.ring.variables:
            f = embed(f, self.ring)
        return reduce_mod(f, self.ideal)


def jacobian_ideal(W: Poly, variables: Sequence[str] | None = None) -> IdealBasis:
    names = tuple(variables) if variables is not None else W.ring.variables
    ring = W.ring.sub(names)
    Wr = embed(W, ring)
    gens = [partial_derivative(Wr, v) for v in names]
    if not gens:
        return IdealBasis(ring, [], [], [])
    return buchberger(gens)


def jacobi_ring(W: Poly, variables: Sequence[str] | None = None) -> JacobiRing:
    """Jac(W) = R / (dW/dx_1, ..., dW/dx_n) with its standard monomial basis."""
    I = jacobian_ideal(W, variables)
    if I.ring.n == 0:
        return JacobiRing(W, I, [()])
    basis = quotient_basis(I)
    return JacobiRing(W, I, basis)


def central_charge(ring: RingSpec) -> Fraction:
    """c = sum (1 - |x_i|) for a graded ring."""
    if not ring.graded:
        raise ValueError("central charge needs variable degrees")
    return sum((1 - d for d in ring.degrees), Fraction(0))


# ---------------------------------------------------------------------------
# residues


@dataclass
class MonomialLift:
    """x_i^N_i = sum_j C[i][j] f_j in the integration ring, with det(C) cached."""

    ring: RingSpec
    exponents: list
    matrix: list
    det: Poly = None

    def __post_init__(self):
        if self.det is None:
            self.det = pm.det(self.matrix, self.ring)


_LIFT_CACHE: dict = {}


def monomial_lift(denominators: Sequence[Poly]) -> MonomialLift:
    if not denominators:
        raise ResidueError("no denominators")
    ring = denominators[0].ring
    key = (ring, tuple(frozenset(f.terms.items()) for f in denominators))
    hit = _LIFT_CACHE.get(key)
    if hit is not None:
        return hit
    I = buchberger(list(denominators))
    try:
        Ns, C = lift_monomial_powers(I)
    except NonIsolatedError as exc:
        raise NonIsolatedError(f"residue denominators do not cut out the origin: {exc}") from None
    lift = MonomialLift(ring, Ns, C)
    _LIFT_CACHE[key] = lift
    return lift


def _split_exponents(ring: RingSpec, integ: Sequence[int], spect: Sequence[int]):
    def split(m):
        ie = tuple((m >> (BITS * i)) & FIELD_MASK for i in integ)
        se = 0
        for k, i in enumerate(spect):
            e = (m >> (BITS * i)) & FIELD_MASK
            if e:
                se |= e << (BITS * k)
        return ie, se
    return split


def residue_with_lift(numerator: Poly, variables: Sequence[str], lift: MonomialLift) -> Poly:
    """Residue of numerator over ``variables`` given a lift to monomial powers.

    Returns a polynomial in the remaining (spectator) variables of the
    numerator's ring.
    """
    ring = numerator.ring
    variables = tuple(variables)
    spect_names = tuple(v for v in ring.variables if v not in variables)
    spect_ring = ring.sub(spect_names)
    integ = [ring.index(v) for v in variables]
    spect = [ring.index(v) for v in spect_names]
    split = _split_exponents(ring, integ, spect)
    Ns = lift.exponents
    n = len(variables)
    det_terms = {unpack(m, n): c for m, c in lift.det.terms.items()}
    out: dict = {}
    for m, c in numerator.terms.items():
        ie, se = split(m)
        need = tuple(N - 1 - e for N, e in zip(Ns, ie))
        if any(x < 0 for x in need):
            continue
        dc = det_terms.get(need)
        if dc is None:
            continue
        v = out.get(se)
        out[se] = c * dc if v is None else v + c * dc
    return Poly(spect_ring, {m: c for m, c in out.items() if c})


def grothendieck_residue(numerator: Poly, denominators: Sequence[Poly],
                         variables: Sequence[str] | None = None) -> Poly:
    """Res[numerator dx / f_1, ..., f_n] over ``variables``.

    Denominators may only involve the integration variables; the result is
    a polynomial in the other variables of the numerator's ring.
    """
    ring = numerator.ring
    if variables is None:
        variables = ring.variables
    variables = tuple(variables)
    if len(denominators) != len(variables):
        raise ResidueError(f"need {len(variables)} denominators, got {len(denominators)}")
    if not variables:
        return embed(numerator, ring.sub(()))
    iring = ring.sub(variables)
    dens = []
    for f in denominators:
        extra = f.variables_used() - set(variables)
        if extra:
            raise ResidueError(f"denominator {f} involves non-integration variables {sorted(extra)}")
        dens.append(embed(f, iring))
    lift = monomial_lift(dens)
    return residue_with_lift(numerator, variables, lift)


def residue_scalar(numerator: Poly, denominators: Sequence[Poly], variables: Sequence[str] | None = None):
    """Residue whose value is a field element (no spectators left)."""
    r = grothendieck_residue(numerator, denominators, variables)
    if r.ring.n and not r.is_constant():
        raise ResidueError(f"residue depends on spectator variables: {r}")
    return r.constant_term() if r else r.ring.field.zero()


def jacobian_denominators(W: Poly, variables: Sequence[str] | None = None) -> list[Poly]:
    names = W.ring.variables if variables is None else tuple(variables)
    return [partial_derivative(W, v) for v in names]


# ---------------------------------------------------------------------------
# pairings


def bulk_pairing(phi1: Poly, phi2: Poly, W: Poly):
    """<phi1, phi2>_W = Res[phi1 phi2 dx / dW]."""
    ring = W.ring
    num = embed(phi1, ring) * embed(phi2, ring)
    return residue_scalar(num, jacobian_denominators(W), ring.variables)


def gram_matrix(W: Poly) -> tuple[list, list]:
    """(basis monomials, bulk pairing matrix) on the standard basis of Jac(W)."""
    J = jacobi_ring(W)
    mons = [embed(m, W.ring) for m in J.monomials()]
    G = [[bulk_pairing(a, b, W) for b in mons] for a in mons]
    return mons, G


def lambda_product(X: MF, variables: Sequence[str]) -> pm.Matrix:
    """d_X differentiated in each of ``variables`` and multiplied in order."""
    ring = X.ring
    out = pm.identity(ring, X.rank)
    for v in variables:
        out = pm.matmul(out, X.derivative(v), ring)
    return out


def _boundary_vars(X: MF) -> tuple[str, ...]:
    if X.source_vars:
        raise MFError("expected a boundary factorisation (no source variables)")
    return tuple(X.ring.variables)


def kapustin_li(psi1: Morphism, psi2: Morphism, X: MF | None = None):
    """<psi1, psi2>_X = Res[str(psi1 psi2 dd_1 ... dd_n) dx / dW] on a boundary factorisation."""
    if X is None:
        X = psi2.source
    names = _boundary_vars(X)
    comp = pm.matmul(psi1.matrix, psi2.matrix, X.ring)
    if len(comp) != X.rank or (comp and len(comp[0]) != X.rank):
        raise MFError("psi1 psi2 must be an endomorphism of X")
    lam = lambda_product(X, names)
    parity = (psi1.parity + psi2.parity + len(names)) % 2
    st = supertrace(pm.matmul(comp, lam, X.ring), X.r0, X.r1, X.ring, parity)
    return residue_scalar(st, jacobian_denominators(X.potential, names), names)


def boundary_bulk(psi: Morphism, X: MF | None = None) -> Poly:
    """(-1)^C(n+1,2) str(psi dd_1 ... dd_n), reduced in Jac(W)."""
    if X is None:
        X = psi.source
    names = _boundary_vars(X)
    n = len(names)
    lam = lambda_product(X, names)
    st = supertrace(pm.matmul(psi.matrix, lam, X.ring), X.r0, X.r1, X.ring, (psi.parity + n) % 2)
    if comb(n + 1, 2) % 2:
        st = -st
    return jacobi_ring(X.potential).reduce(st)


def bulk_boundary(phi: Poly, X: MF) -> Morphism:
    """phi . 1_X."""
    p = embed(phi, X.ring)
    M = [[p if i == j else X.ring.zero() for j in range(X.rank)] for i in range(X.rank)]
    return Morphism(X, X, M, 0)


# ---------------------------------------------------------------------------
# quantum dimensions


def outer_potentials(X: MF) -> tuple[Poly, Poly]:
    """(V, W) with potential(X) = V(target) - W(source)."""
    if not X.is_defect():
        raise MFError("quantum dimensions need a declared source/target split")
    if X.internal_vars():
        raise MFError(f"defect still has internal variables {X.internal_vars()}")
    tv, sv = set(X.target_vars), set(X.source_vars)
    ring = X.ring
    V, W = {}, {}
    for m, c in X.potential.terms.items():
        used = {ring.variables[i] for i in range(ring.n) if (m >> (BITS * i)) & FIELD_MASK}
        if used <= tv:
            V[m] = c
        elif used <= sv:
            W[m] = -c
        else:
            raise MFError("potential mixes source and target variables")
    Vp = restrict(Poly(ring, V), X.target_vars)
    Wp = restrict(Poly(ring, W), X.source_vars)
    return Vp, Wp


@dataclass
class QuantumDimension:
    side: str
    value: Poly  # normal form in the spectator Jacobi ring
    warning: str | None = None
    sign: int = 1

    @property
    def is_constant(self) -> bool:
        return self.value.is_constant() or not self.value

    @property
    def scalar(self):
        if not self.is_constant:
            raise ValueError(f"quantum dimension {self.value} is not a constant")
        return self.value.constant_term() if self.value else self.value.ring.field.zero()

    @property
    def invertible(self) -> bool:
        return bool(self.value) and self.value.is_constant()

    def __str__(self):
        if self.is_constant:
            return format_scalar(self.scalar)
        return str(self.value)


def quantum_dim(X: MF, side: str = "left", decoration: Morphism | pm.Matrix | None = None) -> QuantumDimension:
    """Left or right quantum dimension of a defect X in LG(W, V).

    With m target and n source variables and
    L = d_x1 d ... d_xn d d_z1 d ... d_zm d (derivatives of d_X),

      left  = (-1)^C(n+1,2) Res_z[str(Phi L) dz / dV]   in Jac(W)
      right = (-1)^C(m+1,2) Res_x[str(Phi L) dx / dW]   in Jac(V).

    If m and n have different parities the value is 0 and a warning is set.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    V, W = outer_potentials(X)
    tv, sv = X.target_vars, X.source_vars
    m, n = len(tv), len(sv)
    spect = sv if side == "left" else tv
    spect_pot = W if side == "left" else V
    J = jacobi_ring(spect_pot) if spect else None
    sring = X.ring.sub(spect)
    if (m - n) % 2:
        return QuantumDimension(side, sring.zero(),
                                warning=f"target and source variable counts ({m}, {n}) differ in parity")
    lam = lambda_product(X, tuple(sv) + tuple(tv))
    if decoration is None:
        M = lam
        par = (m + n) % 2
    else:
        Dm = decoration.matrix if isinstance(decoration, Morphism) else decoration
        dpar = decoration.parity if isinstance(decoration, Morphism) else 0
        M = pm.matmul(pm.embed_matrix(Dm, X.ring), lam, X.ring)
        par = (m + n + dpar) % 2
    st = supertrace(M, X.r0, X.r1, X.ring, par)
    if side == "left":
        sign = -1 if comb(n + 1, 2) % 2 else 1
        integ, dens = tv, [partial_derivative(embed(V, X.ring), z) for z in tv]
    else:
        sign = -1 if comb(m + 1, 2) % 2 else 1
        integ, dens = sv, [partial_derivative(embed(W, X.ring), x) for x in sv]
    r = grothendieck_residue(st, dens, integ)
    if sign < 0:
        r = -r
    r = embed(r, sring)
    if J is not None:
        r = J.reduce(r)
    return QuantumDimension(side, r, sign=sign)


def left_dim(X: MF) -> QuantumDimension:
    return quantum_dim(X, "left")


def right_dim(X: MF) -> QuantumDimension:
    return quantum_dim(X, "right")
