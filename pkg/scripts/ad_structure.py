"""Check the splitting A_d = I + J_d and J_d (x) J_d = I for a range of d.

    python3 scripts/ad_structure.py [--d 2 3] [--safety 2 4]
"""

import argparse
import time

from lgdefect.orbifold import ad_structure


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--safety", type=int, nargs="+", default=[2])
    args = ap.parse_args()
    for d in args.d:
        for s in args.safety:
            t = time.perf_counter()
            r = ad_structure(d, safety=s)
            print(f"d={d} safety={s}: A_d ranks {r.algebra_ranks}, H(I, A_d) {r.hom_unit_algebra}, "
                  f"mult(I) {r.unit_multiplicity}, mult(J) {r.j_multiplicity}, "
                  f"J J ranks {r.square_ranks} vs I {r.unit_ranks}, End(J J) {r.square_hom} vs End(I) {r.unit_hom}, "
                  f"mult(I in J J) {r.unit_in_square}  [{time.perf_counter() - t:.1f}s]")


if __name__ == "__main__":
    main()
