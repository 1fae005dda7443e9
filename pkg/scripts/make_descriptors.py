"""Write JSON descriptors for the worked examples into data/.

    python3 scripts/make_descriptors.py [outdir]
"""

import json
import os
import sys

from lgdefect import io as lio
from lgdefect.mf import dual, unit_mf
from lgdefect.models import (ad_defect, cyclic_action, equivariant_power, knorrer_K,
                             power_potential)
from lgdefect.poly import RingSpec
from lgdefect.scalar import FieldSpec


def group_json(G, fld):
    return json.dumps(lio.group_to_dict(G, fld), indent=2) + "\n"


def main(outdir):
    os.makedirs(outdir, exist_ok=True)

    def put(name, text):
        with open(os.path.join(outdir, name), "w", encoding="utf-8") as fh:
            fh.write(text)

    K = knorrer_K()
    put("knorrer_K.json", lio.dumps_mf(K))
    put("knorrer_K_dual.json", lio.dumps_mf(dual(K)))
    put("unit_point.json", lio.dumps_mf(unit_mf(RingSpec(()))))
    for d in range(2, 7):
        put(f"ad_defect_{d}.json", lio.dumps_mf(ad_defect(d)))

    put("z2_x.json", group_json(cyclic_action(2), FieldSpec.cyclotomic(2)))
    put("z3_x.json", group_json(cyclic_action(3), FieldSpec.cyclotomic(3)))
    neg = lio.generate_group(("x", "y"), [[[-1, 0], [0, -1]]])
    put("neg_xy.json", group_json(neg, FieldSpec.rationals()))

    for d, n in ((3, 1), (5, 2)):
        E = equivariant_power(d, n)
        fld = E.X.ring.field
        desc = {
            "mf": lio.mf_to_dict(E.X),
            "group": lio.group_to_dict(E.group, fld),
            "generator": 1,
            "phi": [[str(p) for p in row] for row in E.phis[1].matrix],
        }
        put(f"equivariant_x{d}_n{n}.json", json.dumps(desc, indent=2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data"))
