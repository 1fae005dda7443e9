"""Command-line front end.

Every command builds a result dictionary of exact values rendered as text;
``--json`` prints that dictionary, otherwise it is printed as ``key: value``
lines.  Commands that produce a factorisation emit its JSON descriptor.

Configuration falls back to the environment when a flag is absent:
``LGDEFECT_FIELD`` (coefficient field) and ``LGDEFECT_SAFETY`` (fusion
truncation safety factor).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import io as lio
from .poly import Poly, RingSpec, format_poly, parse_poly
from .scalar import FieldSpec, format_scalar, join_fields, parse_field
from .textparse import ParseError, tokenize


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration and parsing helpers


def _field(args) -> FieldSpec | None:
    text = args.field if getattr(args, "field", None) else os.environ.get("LGDEFECT_FIELD")
    if not text:
        return None
    try:
        return parse_field(text)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _safety(args) -> int | None:
    if getattr(args, "safety", None) is not None:
        if args.safety < 1:
            raise UsageError("--safety must be at least 1")
        return args.safety
    return None  # fusion reads LGDEFECT_SAFETY itself


def infer_variables(texts: Sequence[str], fld: FieldSpec) -> tuple[str, ...]:
    """Identifiers in order of first appearance; ``z`` is the root of unity over Q(zeta_n)."""
    names: list[str] = []
    for text in texts:
        depth = 0
        for kind, val, _ in tokenize(text):
            if kind == "op" and val == "[":
                depth += 1
            elif kind == "op" and val == "]":
                depth -= 1
            elif kind == "ident" and depth == 0 and val not in names:
                if val == "z" and fld.is_cyclotomic:
                    continue
                names.append(val)
    return tuple(names)


def _ring_for(texts: Sequence[str], args, extra_field: FieldSpec | None = None) -> RingSpec:
    fld = _field(args) or FieldSpec.rationals()
    if extra_field is not None:
        fld = join_fields(fld, extra_field)
    if getattr(args, "vars", None):
        names = tuple(v.strip() for v in args.vars.split(",") if v.strip())
    else:
        names = infer_variables(texts, fld)
    return RingSpec(names, None, fld)


def _polys(texts: Sequence[str], args) -> list[Poly]:
    R = _ring_for(texts, args)
    out = []
    for t in texts:
        try:
            out.append(parse_poly(t, R))
        except KeyError as e:
            raise UsageError(f"unknown identifier {e.args[0]!r} in {t!r}") from None
    return out


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _mf(path: str, args):
    return lio.loads_mf(_read(path), _field(args))


def _group(path: str, args):
    return lio.loads_group(_read(path), _field(args))


def _matrix_text(M) -> list:
    return [[format_poly(p) for p in row] for row in M]


def _render(value) -> str:
    if isinstance(value, (dict, list)):
        return json.dumps(value)
    return str(value)


def _emit(result: dict, args, out):
    if args.json:
        out.write(json.dumps(result, indent=2) + "\n")
    else:
        for k, v in result.items():
            out.write(f"{k}: {_render(v)}\n")


# ---------------------------------------------------------------------------
# commands


def cmd_jacobi(args):
    from .residue import jacobi_ring
    (W,) = _polys([args.potential], args)
    J = jacobi_ring(W)
    return {"basis": [format_poly(m) for m in J.monomials()], "dimension": J.dimension}, 0


def cmd_lift(args):
    from .groebner import buchberger, lift_monomial_powers
    gens = _polys(args.generators, args)
    ring = gens[0].ring
    I = buchberger(gens)
    Ns, C = lift_monomial_powers(I)
    return {"variables": list(ring.variables), "generators": [format_poly(g) for g in I.generators],
            "exponents": Ns, "cofactors": [[format_poly(c) for c in row] for row in C]}, 0


def cmd_homdim(args):
    from .homalg import hom_dimensions
    X, Y = _mf(args.source, args), _mf(args.target, args)
    even, odd = hom_dimensions(X, Y, args.method)
    return {"even": even, "odd": odd}, 0


def cmd_nullhtpy(args):
    from .homalg import is_null_homotopic
    F = lio.loads_morphism(_read(args.morphism))
    res = is_null_homotopic(F, args.method)
    out = {"null_homotopic": res.null}
    if res.witness is not None:
        out["witness"] = _matrix_text(res.witness.matrix)
    if res.reason:
        out["reason"] = res.reason
    return out, 0


def cmd_qdim(args):
    from .residue import quantum_dim
    X = _mf(args.mf, args)
    deco = lio.loads_morphism(_read(args.decoration)) if args.decoration else None
    q = quantum_dim(X, args.side, deco)
    out = {"side": args.side, "value": str(q)}
    if q.warning:
        out["warning"] = q.warning
    return out, 0


def cmd_pairing(args):
    if args.kl:
        from .residue import kapustin_li
        if len(args.items) != 2:
            raise UsageError("--kl needs two morphism descriptors")
        a, b = (lio.loads_morphism(_read(p)) for p in args.items)
        return {"pairing": format_scalar(kapustin_li(a, b))}, 0
    from .residue import bulk_pairing
    if len(args.items) != 3:
        raise UsageError("pairing needs a potential and two polynomials")
    W, p1, p2 = _polys(args.items, args)
    return {"pairing": format_scalar(bulk_pairing(p1, p2, W))}, 0


def cmd_gram(args):
    from .residue import gram_matrix
    (W,) = _polys([args.potential], args)
    mons, G = gram_matrix(W)
    return {"basis": [format_poly(m) for m in mons],
            "gram": [[format_scalar(c) for c in row] for row in G]}, 0


def cmd_ccharge(args):
    from .mf import graded_ring_for
    from .residue import central_charge
    (W,) = _polys([args.potential], args)
    R = graded_ring_for(W)
    c = central_charge(R)
    return {"weights": {v: str(d) for v, d in zip(R.variables, R.degrees)},
            "central_charge": str(c)}, 0


def cmd_fuse(args):
    from .fusion import fusion_details
    Y, X = _mf(args.left, args), _mf(args.right, args)
    mids = tuple(v.strip() for v in args.intermediate.split(",")) if args.intermediate else None
    res = fusion_details(Y, X, mids, safety=_safety(args))
    return lio.mf_to_dict(res.mf), 0


def _potential_and_group(args):
    G = _group(args.group, args)
    gdata = json.loads(_read(args.group))
    R = _ring_for([args.potential], args, lio.group_field(gdata))
    names = tuple(R.variables)
    if not set(names) <= set(G.variables):
        raise UsageError(f"potential variables {names} are not acted on by the group {G.variables}")
    R = RingSpec(tuple(G.variables), None, R.field)
    try:
        W = parse_poly(args.potential, R)
    except KeyError as e:
        raise UsageError(f"unknown identifier {e.args[0]!r}") from None
    return W, G


def cmd_ag_build(args):
    from .orbifold import OrbifoldAlgebra
    W, G = _potential_and_group(args)
    A = OrbifoldAlgebra(W, G)
    C = A.carrier()
    out = {"order": A.order, "block_ranks": [list(b.ranks) for b in A.blocks()],
           "carrier": lio.mf_to_dict(C)}
    return out, 0


def cmd_ag_check(args):
    from .orbifold import OrbifoldAlgebra, check_frobenius_axioms
    W, G = _potential_and_group(args)
    A = OrbifoldAlgebra(W, G)
    if args.corrupt:
        A.corrupt(args.corrupt[0], args.corrupt[1])
    rep = check_frobenius_axioms(A)
    summary = {name: f"{ok}/{total}" for name, (ok, total) in rep.summary().items()}
    out = {"passed": rep.passed, "checks": summary}
    if not rep.passed:
        out["failures"] = [f"{c.name} at {c.location}: {c.detail}" for c in rep.failures()[:20]]
    return out, 0 if rep.passed else 1


def cmd_ag_symmetric(args):
    from .orbifold import ag_is_symmetric
    W, G = _potential_and_group(args)
    v = ag_is_symmetric(W, G)
    return {"symmetric": v.symmetric,
            "determinants": [format_scalar(d) for d in v.determinants],
            "right_dimensions": [format_scalar(d) if not isinstance(d, Poly) else str(d)
                                 for d in v.right_dims]}, 0


def cmd_equiv_check(args):
    from .orbifold import equivariant_to_module, round_trip_defects
    E = lio.loads_equivariant(_read(args.descriptor))
    M = equivariant_to_module(E)
    module_defects = M.axiom_defects()
    rt = round_trip_defects(E)
    ok = not module_defects and not rt
    out = {"equivariant": True, "module_axioms": not module_defects, "round_trip": not rt}
    if args.hom:
        from .orbifold import orbifold_hom
        out["end_dimensions"] = list(orbifold_hom(M, M).dims)
    return out, 0 if ok else 1


def cmd_ad_build(args):
    from .orbifold import ad_structure, build_Ad
    from .homalg import hom_dimensions
    if args.structure:
        r = ad_structure(args.d, _safety(args))
        out = {"d": r.d, "ranks": list(r.algebra_ranks),
               "multiplicity_I": r.unit_multiplicity, "multiplicity_J": r.j_multiplicity,
               "JJ_ranks": list(r.square_ranks), "I_ranks": list(r.unit_ranks),
               "End_JJ": list(r.square_hom), "End_I": list(r.unit_hom),
               "multiplicity_I_in_JJ": r.unit_in_square,
               "dim_r": {k: str(v) for k, v in r.qdims.items()},
               "mf": lio.mf_to_dict(r.algebra.mf)}
        ok = (r.unit_multiplicity == 1 and r.j_multiplicity == 1 and r.unit_in_square == 1
              and r.square_hom == r.unit_hom)
        return out, 0 if ok else 1
    res = build_Ad(args.d, _safety(args))
    return lio.mf_to_dict(res.mf), 0


def cmd_report(args):
    from .report import run_report
    claims = run_report(range(args.d_min, args.d_max + 1), _safety(args), args.with_ad)
    ok = all(c.match for c in claims)
    if args.json:
        return {"all_match": ok, "claims": [c.as_dict() for c in claims]}, 0 if ok else 1
    width = max(len(c.claim) for c in claims)
    lines = [f"{'claim'.ljust(width)}  computed | expected | match"]
    for c in claims:
        lines.append(f"{c.claim.ljust(width)}  {c.computed} | {c.expected} | {'yes' if c.match else 'NO'}")
    return {"table": "\n".join(lines), "all_match": ok}, 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--field", help="coefficient field, e.g. QQ or QQ(z5) (env LGDEFECT_FIELD)")
    common.add_argument("--vars", help="comma-separated variable order for polynomial arguments")

    p = argparse.ArgumentParser(prog="lgdefect", description="Exact matrix factorisation calculus.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("jacobi", parents=[common], help="Jacobi ring basis and dimension")
    s.add_argument("potential")
    s.set_defaults(fn=cmd_jacobi)

    s = sub.add_parser("lift", parents=[common], help="x_i^N_i as combinations of ideal generators")
    s.add_argument("generators", nargs="+")
    s.set_defaults(fn=cmd_lift)

    s = sub.add_parser("homdim", parents=[common], help="dimensions of H^0, H^1 of Hom(X, Y)")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--method", default="auto", choices=["auto", "graded", "syzygy"])
    s.set_defaults(fn=cmd_homdim)

    s = sub.add_parser("nullhtpy", parents=[common], help="decide null-homotopy of a morphism")
    s.add_argument("morphism")
    s.add_argument("--method", default="auto", choices=["auto", "graded", "syzygy"])
    s.set_defaults(fn=cmd_nullhtpy)

    s = sub.add_parser("qdim", parents=[common], help="left or right quantum dimension")
    s.add_argument("mf")
    s.add_argument("--side", default="right", choices=["left", "right"])
    s.add_argument("--decoration", help="morphism descriptor inserted into the supertrace")
    s.set_defaults(fn=cmd_qdim)

    s = sub.add_parser("pairing", parents=[common], help="bulk residue pairing or boundary pairing")
    s.add_argument("items", nargs="+", help="W phi1 phi2, or two morphism files with --kl")
    s.add_argument("--kl", action="store_true", help="boundary pairing of two morphisms")
    s.set_defaults(fn=cmd_pairing)

    s = sub.add_parser("gram", parents=[common], help="bulk pairing matrix on the Jacobi basis")
    s.add_argument("potential")
    s.set_defaults(fn=cmd_gram)

    s = sub.add_parser("ccharge", parents=[common], help="weights and central charge")
    s.add_argument("potential")
    s.set_defaults(fn=cmd_ccharge)

    s = sub.add_parser("fuse", parents=[common], help="finite-rank fusion Y (x) X")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("--intermediate", help="comma-separated variables summed over")
    s.add_argument("--safety", type=int, help="truncation safety factor (env LGDEFECT_SAFETY)")
    s.set_defaults(fn=cmd_fuse)

    o = sub.add_parser("orbifold", help="orbifold algebras and equivariant factorisations")
    osub = o.add_subparsers(dest="orbifold_command", required=True)
    for name, fn, hlp in (("ag-build", cmd_ag_build, "build A_G"),
                          ("ag-check", cmd_ag_check, "check the Frobenius algebra axioms of A_G"),
                          ("ag-symmetric", cmd_ag_symmetric, "symmetry of A_G by two routes")):
        s = osub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("potential")
        s.add_argument("--group", required=True, help="group action descriptor")
        if name == "ag-check":
            s.add_argument("--corrupt", nargs=2, type=int, metavar=("G", "H"),
                           help="perturb mu_{g,h} (negative control)")
        s.set_defaults(fn=fn)
    s = osub.add_parser("equiv-check", parents=[common], help="validate an equivariant factorisation")
    s.add_argument("descriptor")
    s.add_argument("--hom", action="store_true", help="also compute dim End_A(X)")
    s.set_defaults(fn=cmd_equiv_check)
    s = osub.add_parser("ad-build", parents=[common], help="build A_d = X^dagger (x) X")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--safety", type=int)
    s.add_argument("--structure", action="store_true", help="verify the splitting A_d = I + J_d")
    s.set_defaults(fn=cmd_ad_build)

    s = sub.add_parser("report", parents=[common], help="recompute every worked example")
    s.add_argument("--d-min", type=int, default=2)
    s.add_argument("--d-max", type=int, default=6)
    s.add_argument("--safety", type=int)
    s.add_argument("--with-ad", action="store_true", help="include the A_d structure checks")
    s.set_defaults(fn=cmd_report)
    return p


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        result, code = args.fn(args)
    except (ParseError, lio.DescriptorError, UsageError) as e:
        err.write(f"error [{type(e).__name__}]: {e}\n")
        return 2
    except (ValueError, ArithmeticError, OSError) as e:
        err.write(f"error [{type(e).__name__}]: {e}\n")
        return 1
    if "format" in result:
        # a bare factorisation descriptor is always emitted as JSON
        out.write(lio.dumps_mf(lio.mf_from_dict(result)))
    elif not args.json and "table" in result:
        out.write(result["table"] + "\n")
        out.write(f"all_match: {result['all_match']}\n")
    else:
        _emit(result, args, out)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
