"""JSON descriptors for factorisations, group actions and equivariant data.

Polynomials are stored as canonical text (``format_poly``), so emitting,
parsing and emitting again reproduces the same bytes.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Sequence

from .mf import MF, GroupAction, GroupElement, MFError, Morphism, compose_elements, twist
from .poly import Poly, RingSpec, format_poly, parse_poly
from .scalar import FieldSpec, parse_field
from .textparse import ParseError

FORMAT = "lgdefect-mf/1"


class DescriptorError(ValueError):
    """A descriptor that is not valid JSON or does not describe a valid object.

    ``line``/``column`` locate the problem in the JSON text when known; for
    polynomial syntax errors ``where`` names the offending field and
    ``poly_column`` the column inside that string.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 where: str | None = None, poly_column: int | None = None):
        self.line, self.column, self.where, self.poly_column = line, column, where, poly_column
        loc = []
        if line is not None:
            loc.append(f"line {line}, column {column}")
        if where:
            loc.append(f"in {where}" + (f" at column {poly_column}" if poly_column else ""))
        super().__init__(("; ".join(loc) + ": " if loc else "") + message)


def _frac_text(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DescriptorError(e.msg, e.lineno, e.colno) from None


def _locate(text: str | None, needle: str):
    """Line and column of the first occurrence of a JSON string literal."""
    if text is None:
        return None, None
    pos = text.find(json.dumps(needle))
    if pos < 0:
        return None, None
    return text.count("\n", 0, pos) + 1, pos - (text.rfind("\n", 0, pos) + 1) + 1


def _poly(text_value, ring: RingSpec, where: str, source: str | None) -> Poly:
    if not isinstance(text_value, str):
        raise DescriptorError(f"expected a polynomial string, got {text_value!r}", where=where)
    try:
        return parse_poly(text_value, ring)
    except ParseError as e:
        line, col = _locate(source, text_value)
        raise DescriptorError(e.reason, line, col, where, e.column) from None
    except KeyError as e:
        line, col = _locate(source, text_value)
        raise DescriptorError(f"unknown variable {e.args[0]!r}", line, col, where) from None


# ---------------------------------------------------------------------------
# rings


def ring_to_dict(R: RingSpec) -> dict:
    return {
        "variables": list(R.variables),
        "degrees": None if R.degrees is None else [_frac_text(d) for d in R.degrees],
        "field": str(R.field),
    }


def ring_from_dict(data: dict, field_override: FieldSpec | None = None) -> RingSpec:
    try:
        fld = field_override or parse_field(data.get("field", "QQ"))
        degs = data.get("degrees")
        degs = None if degs is None else tuple(Fraction(d) for d in degs)
        return RingSpec(tuple(data["variables"]), degs, fld)
    except (KeyError, ValueError, TypeError) as e:
        raise DescriptorError(f"bad ring: {e}", where="ring") from None


# ---------------------------------------------------------------------------
# factorisations


def mf_to_dict(X: MF) -> dict:
    return {
        "format": FORMAT,
        "ring": ring_to_dict(X.ring),
        "potential": format_poly(X.potential),
        "ranks": [X.r0, X.r1],
        "d0": [[format_poly(p) for p in row] for row in X.d0],
        "d1": [[format_poly(p) for p in row] for row in X.d1],
        "grading": None if X.grading is None else [_frac_text(g) for g in X.grading],
        "target": None if X.target_vars is None else list(X.target_vars),
        "source": None if X.source_vars is None else list(X.source_vars),
    }


def mf_from_dict(data: dict, source: str | None = None, field_override: FieldSpec | None = None,
                 check: bool = True) -> MF:
    if not isinstance(data, dict):
        raise DescriptorError("a factorisation descriptor must be a JSON object")
    for key in ("ring", "potential", "d0", "d1"):
        if key not in data:
            raise DescriptorError(f"missing key {key!r}")
    R = ring_from_dict(data["ring"], field_override)
    W = _poly(data["potential"], R, "potential", source)
    d0 = [[_poly(p, R, f"d0[{i}][{j}]", source) for j, p in enumerate(row)] for i, row in enumerate(data["d0"])]
    d1 = [[_poly(p, R, f"d1[{i}][{j}]", source) for j, p in enumerate(row)] for i, row in enumerate(data["d1"])]
    ranks = data.get("ranks") or [len(d1), len(d0)]
    grading = data.get("grading")
    try:
        return MF(R, W, d0, d1, int(ranks[0]), int(ranks[1]),
                  grading=None if grading is None else [Fraction(g) for g in grading],
                  target_vars=data.get("target"), source_vars=data.get("source"), check=check)
    except MFError as e:
        raise DescriptorError(str(e)) from None


def dumps_mf(X: MF) -> str:
    return json.dumps(mf_to_dict(X), indent=2) + "\n"


def loads_mf(text: str, field_override: FieldSpec | None = None) -> MF:
    return mf_from_dict(_loads(text), text, field_override)


def read_mf(path: str, field_override: FieldSpec | None = None) -> MF:
    with open(path, encoding="utf-8") as fh:
        return loads_mf(fh.read(), field_override)


def write_mf(X: MF, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_mf(X))


# ---------------------------------------------------------------------------
# group actions


def _scalar_matrix(rows, fld: FieldSpec, where: str):
    try:
        return tuple(tuple(fld.parse(str(c)) for c in row) for row in rows)
    except ParseError as e:
        raise DescriptorError(e.reason, where=where, poly_column=e.column) from None
    except (KeyError, ValueError) as e:
        raise DescriptorError(f"bad scalar: {e}", where=where) from None


def generate_group(variables: Sequence[str], generators: Sequence, fld: FieldSpec | None = None) -> GroupAction:
    """Closure of the given substitution matrices under composition."""
    variables = tuple(variables)
    n = len(variables)
    fld = fld or FieldSpec.rationals()
    ident = GroupElement(variables, tuple(tuple(fld.coerce(1 if i == j else 0) for j in range(n))
                                          for i in range(n)))
    gens = [GroupElement(variables, tuple(tuple(r) for r in M)) for M in generators]
    elems = [ident]
    seen = {ident.matrix}
    frontier = [ident]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = compose_elements(a, g)
                if b.matrix not in seen:
                    seen.add(b.matrix)
                    elems.append(b)
                    nxt.append(b)
        frontier = nxt
        if len(elems) > 5000:
            raise DescriptorError("generated group is too large or infinite")
    return GroupAction(variables, elems)


def group_from_dict(data: dict, field_override: FieldSpec | None = None) -> GroupAction:
    """``{"variables": [...], "field": "QQ(z3)", "generators": [matrix, ...]}``.

    Matrices are lists of rows of scalar strings; ``z`` is the primitive root.
    ``elements`` may be given instead of ``generators`` to fix the ordering.
    """
    try:
        variables = tuple(data["variables"])
        fld = field_override or parse_field(data.get("field", "QQ"))
    except (KeyError, ValueError, TypeError) as e:
        raise DescriptorError(f"bad group action: {e}", where="group") from None
    if "elements" in data:
        elems = [GroupElement(variables, _scalar_matrix(M, fld, f"elements[{k}]"))
                 for k, M in enumerate(data["elements"])]
        try:
            return GroupAction(variables, elems)
        except MFError as e:
            raise DescriptorError(str(e), where="elements") from None
    gens = [_scalar_matrix(M, fld, f"generators[{k}]") for k, M in enumerate(data.get("generators", []))]
    return generate_group(variables, gens, fld)


def group_to_dict(G: GroupAction, fld: FieldSpec) -> dict:
    return {
        "variables": list(G.variables),
        "field": str(fld),
        "elements": [[[fld.format(c) for c in row] for row in g.matrix] for g in G.elements],
    }


def loads_group(text: str, field_override: FieldSpec | None = None) -> GroupAction:
    return group_from_dict(_loads(text), field_override)


def group_field(data: dict) -> FieldSpec:
    return parse_field(data.get("field", "QQ"))


# ---------------------------------------------------------------------------
# equivariant factorisations


def equivariant_from_dict(data: dict, source: str | None = None, check: bool = True):
    """``{"mf": {...}, "group": {...}, "generator": k, "phi": [[poly, ...], ...]}``.

    ``phi`` is the isomorphism gX -> X for the group element with index ``k``
    (the group must be cyclic, generated by it).  The full family is produced
    by the cocycle rule and validated unless ``check`` is false.
    """
    from .orbifold import EquivariantStructure
    for key in ("mf", "group", "phi"):
        if key not in data:
            raise DescriptorError(f"missing key {key!r}")
    gfld = group_field(data["group"])
    mfld = parse_field(data["mf"]["ring"].get("field", "QQ"))
    from .scalar import join_fields
    fld = join_fields(gfld, mfld)
    X = mf_from_dict(data["mf"], source, field_override=fld)
    G = group_from_dict(data["group"], fld)
    k = int(data.get("generator", 1))
    if not 0 <= k < len(G.elements):
        raise DescriptorError(f"generator index {k} out of range", where="generator")
    R = X.ring
    M = [[_poly(p, R, f"phi[{i}][{j}]", source) for j, p in enumerate(row)] for i, row in enumerate(data["phi"])]
    phi = Morphism(twist(G.elements[k], X), X, M)
    return EquivariantStructure.from_generator(X, G, k, phi, check=check)


def loads_equivariant(text: str, check: bool = True):
    return equivariant_from_dict(_loads(text), text, check)


# ---------------------------------------------------------------------------
# morphisms


def morphism_to_dict(F: Morphism) -> dict:
    return {
        "source": mf_to_dict(F.source),
        "target": mf_to_dict(F.target),
        "parity": F.parity,
        "matrix": [[format_poly(p) for p in row] for row in F.matrix],
    }


def morphism_from_dict(data: dict, source: str | None = None) -> Morphism:
    """``{"source": mf, "target": mf (default: source), "parity": p, "matrix": [...]}``."""
    for key in ("source", "matrix"):
        if key not in data:
            raise DescriptorError(f"missing key {key!r}")
    X = mf_from_dict(data["source"], source)
    Y = mf_from_dict(data["target"], source) if data.get("target") is not None else X
    R = Y.ring
    M = [[_poly(p, R, f"matrix[{i}][{j}]", source) for j, p in enumerate(row)]
         for i, row in enumerate(data["matrix"])]
    if len(M) != Y.rank or any(len(row) != X.rank for row in M):
        raise DescriptorError(f"matrix must be {Y.rank} x {X.rank}", where="matrix")
    try:
        return Morphism(X, Y, M, int(data.get("parity", 0)))
    except MFError as e:
        raise DescriptorError(str(e)) from None


def loads_morphism(text: str) -> Morphism:
    return morphism_from_dict(_loads(text), text)
