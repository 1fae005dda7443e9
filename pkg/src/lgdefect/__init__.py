"""Exact computer algebra for matrix factorisations, Landau-Ginzburg defects and orbifolds."""

from .scalar import Cyclo, FieldSpec
from .poly import Poly, RingSpec, parse_poly, format_poly
from .mf import MF, Morphism, GroupAction, koszul, identity_defect, dual, tensor, twist
from .homalg import hom_dimensions, is_null_homotopic, minimal_model
from .residue import quantum_dim, left_dim, right_dim, kapustin_li, jacobi_ring
from .fusion import fuse, fusion_details
from .orbifold import (OrbifoldAlgebra, EquivariantStructure, build_AG, build_Ad, check_frobenius_axioms,
                       orbifold_hom, tensor_over_algebra)

__version__ = "0.1.0"
