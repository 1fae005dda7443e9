"""Axiom checks, module and bulk dimensions for the three small orbifold algebras.

    python3 scripts/orbifold_tables.py
"""

import time

from lgdefect.homalg import hom_dimensions
from lgdefect.mf import GroupAction
from lgdefect.models import cyclic_action, power_potential
from lgdefect.orbifold import (OrbifoldAlgebra, ag_is_symmetric, algebra_as_module, bulk_gram, bulk_space,
                               check_frobenius_axioms, orbifold_hom)
from lgdefect.poly import RingSpec
from lgdefect.scalar import format_scalar


def cases():
    yield "x^2 / Z2", RingSpec(("x",)).parse("x^2"), GroupAction.cyclic(("x",), [[-1]])
    yield "x^3 / Z3", power_potential(3), cyclic_action(3)
    yield "x^4 - y^2 / Z2", RingSpec(("x", "y")).parse("x^4 - y^2"), \
        GroupAction.cyclic(("x", "y"), [[-1, 0], [0, -1]])


def main():
    for name, W, G in cases():
        t = time.perf_counter()
        A = OrbifoldAlgebra(W, G)
        rep = check_frobenius_axioms(A)
        sym = ag_is_symmetric(W, G)
        C = A.carrier()
        M = algebra_as_module(A)
        bs = bulk_space(A)
        gram = [[format_scalar(c) for c in row] for row in bulk_gram(A, bs)]
        print(f"{name}")
        print(f"  axioms: {'pass' if rep.passed else 'FAIL'} "
              + ", ".join(f"{k} {a}/{b}" for k, (a, b) in rep.summary().items()))
        print(f"  symmetric: {sym.symmetric}  (det {[format_scalar(d) for d in sym.determinants]})")
        print(f"  End(A) {hom_dimensions(C, C)}, End_A(A) {orbifold_hom(M, M).dims}, bulk {bs.dims}")
        print(f"  bulk Gram: {gram}  [{time.perf_counter() - t:.1f}s]")


if __name__ == "__main__":
    main()
