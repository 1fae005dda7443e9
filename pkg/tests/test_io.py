import json
import os

import pytest
from hypothesis import given, strategies as st

from lgdefect import io as lio
from lgdefect.mf import GroupAction, dual, identity_defect, koszul, twist
from lgdefect.models import ad_defect, cyclic_action, equivariant_power, knorrer_K, power_potential
from lgdefect.poly import RingSpec
from lgdefect.scalar import FieldSpec

DATA = os.path.join(os.path.dirname(__file__), "..", "data")


def corpus():
    R = RingSpec(("x", "y"))
    W = R.parse("x^3 + y^4")
    yield knorrer_K()
    yield dual(knorrer_K())
    yield ad_defect(3)
    yield identity_defect(W)
    yield identity_defect(power_potential(5))
    G = cyclic_action(5)
    I = identity_defect(power_potential(5))
    yield twist(G.elements[2], I, on=I.target_vars)
    yield equivariant_power(4, 1).X


@pytest.mark.parametrize("X", list(corpus()), ids=lambda X: f"{X.ring.field}-{X.r0}x{X.r1}")
def test_round_trip_is_byte_exact(X):
    text = lio.dumps_mf(X)
    Y = lio.loads_mf(text)
    assert Y == X
    assert lio.dumps_mf(Y) == text


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-9, 9)), min_size=1, max_size=3))
def test_round_trip_random_koszul(parts):
    R = RingSpec(("x", "y"), None, FieldSpec.cyclotomic(3))
    z = R.field.zeta()
    pairs = []
    for a, b, c in parts:
        f = R.gen("x") ** a + R.const(c * z)
        g = R.gen("y") ** b - R.const(z)
        pairs.append((f, g))
    X = koszul(pairs, ring=R)
    text = lio.dumps_mf(X)
    assert lio.dumps_mf(lio.loads_mf(text)) == text


@pytest.mark.parametrize("name", sorted(n for n in os.listdir(DATA) if n.endswith(".json")))
def test_shipped_descriptors_are_canonical(name):
    with open(os.path.join(DATA, name)) as fh:
        text = fh.read()
    data = json.loads(text)
    if data.get("format") == lio.FORMAT:
        assert lio.dumps_mf(lio.loads_mf(text)) == text
    elif "mf" in data:
        E = lio.loads_equivariant(text)
        assert E.group.order >= 2
    else:
        G = lio.loads_group(text)
        assert G.order == len(data["elements"])


def test_json_syntax_error_has_location():
    text = '{\n  "ring": {"variables": ["x"]},\n  "potential": "x^3",\n  oops\n}'
    with pytest.raises(lio.DescriptorError) as e:
        lio.loads_mf(text)
    assert e.value.line == 4 and e.value.column == 3


def test_polynomial_error_has_location():
    X = knorrer_K()
    data = lio.mf_to_dict(X)
    data["d0"][0][0] = "u + * v"
    text = json.dumps(data, indent=2)
    with pytest.raises(lio.DescriptorError) as e:
        lio.loads_mf(text)
    err = e.value
    assert err.where == "d0[0][0]"
    assert err.poly_column == 5
    assert text.splitlines()[err.line - 1][err.column - 1:].startswith('"u + * v"')


def test_unknown_variable_and_bad_factorisation():
    data = lio.mf_to_dict(knorrer_K())
    data["d1"][0][0] = "u - w"
    with pytest.raises(lio.DescriptorError, match="unknown identifier 'w'"):
        lio.mf_from_dict(data)
    data["d1"][0][0] = "u - 2*v"
    with pytest.raises(lio.DescriptorError):
        lio.mf_from_dict(data)
    assert lio.mf_from_dict(data, check=False).d1[0][0] == knorrer_K().ring.parse("u - 2*v")


def test_missing_keys():
    with pytest.raises(lio.DescriptorError, match="potential"):
        lio.mf_from_dict({"ring": {"variables": ["x"]}, "d0": [], "d1": []})
    with pytest.raises(lio.DescriptorError):
        lio.loads_mf("[1, 2]")


def test_field_override_lifts_descriptor():
    text = lio.dumps_mf(knorrer_K())
    X = lio.loads_mf(text, field_override=FieldSpec.cyclotomic(4))
    assert X.ring.field == FieldSpec.cyclotomic(4)
    assert '"QQ(z4)"' in lio.dumps_mf(X)


def test_group_generators_close():
    text = json.dumps({"variables": ["x", "y"], "field": "QQ(z6)",
                       "generators": [[["z", "0"], ["0", "z^5"]]]})
    G = lio.loads_group(text)
    assert G.order == 6
    back = lio.group_to_dict(G, FieldSpec.cyclotomic(6))
    again = lio.group_from_dict(back)
    assert [g.matrix for g in again.elements] == [g.matrix for g in G.elements]


def test_group_elements_must_form_a_group():
    text = json.dumps({"variables": ["x"], "elements": [[["1"]], [["2"]]]})
    with pytest.raises(lio.DescriptorError):
        lio.loads_group(text)


def test_group_scalar_error():
    text = json.dumps({"variables": ["x"], "field": "QQ(z3)", "generators": [[["z +"]]]})
    with pytest.raises(lio.DescriptorError) as e:
        lio.loads_group(text)
    assert e.value.where == "generators[0]"


def test_equivariant_descriptor_matches_model():
    with open(os.path.join(DATA, "equivariant_x5_n2.json")) as fh:
        E = lio.loads_equivariant(fh.read())
    ref = equivariant_power(5, 2)
    assert E.X == ref.X
    assert all(a.matrix == b.matrix for a, b in zip(E.phis, ref.phis))


def test_morphism_round_trip():
    X = knorrer_K()
    F = X.identity().scale(3)
    data = lio.morphism_to_dict(F)
    G = lio.loads_morphism(json.dumps(data))
    assert G.matrix == F.matrix and G.parity == 0
    data["matrix"] = [["1", "0"]]
    with pytest.raises(lio.DescriptorError, match="matrix must be"):
        lio.morphism_from_dict(data)


def test_group_action_identity_coerced():
    G = lio.generate_group(("x",), [[[FieldSpec.rationals().coerce(-1)]]])
    assert isinstance(G, GroupAction) and G.order == 2
