import cmath

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyharm import expr as E
from polyharm.errors import DomainError, ValidationError
from polyharm.jets import jet_var


def _sample():
    x, t = E.coord("x1"), E.coord("t1")
    return E.arsinh(E.exp(-t) * x) ** 3 + E.pow_complex(x, 0.5 + 1j) * E.log(x) - E.sqrt(x) / (E.const(2j) + t)


def test_round_trip_and_hash():
    e = _sample()
    back = E.loads(E.dumps(e))
    assert back == e
    assert E.expr_hash(back) == E.expr_hash(e)
    assert E.expr_hash(e + 1) != E.expr_hash(e)


def test_evaluate_matches_cmath():
    env = {"x1": 0.7 + 0j, "t1": 0.2 + 0j}
    x, t = 0.7, 0.2
    want = cmath.asinh(cmath.exp(-t) * x) ** 3 + x ** (0.5 + 1j) * cmath.log(x) - cmath.sqrt(x) / (2j + t)
    assert E.evaluate(_sample(), env) == pytest.approx(want, rel=1e-14)


def test_jets_and_values_agree():
    e = _sample()
    env = {"x1": jet_var(0, 0.7, 2, 3), "t1": jet_var(1, 0.2, 2, 3)}
    assert E.eval_jets(e, env).value == pytest.approx(E.evaluate(e, {"x1": 0.7, "t1": 0.2}), rel=1e-14)


def test_branch_cut_reported_with_path():
    with pytest.raises(DomainError, match="log"):
        E.evaluate(E.log(E.coord("x1")), {"x1": -1.0})


def test_coordinates_substitute_and_branch_nodes():
    e = _sample()
    assert E.coordinates(e) == {"x1", "t1"}
    z = E.coord("z")
    s = E.substitute(E.sin(z) * z, {"z": E.coord("x1") + 1})
    assert E.coordinates(s) == {"x1"}
    ops = sorted(n.op for _, n in E.branch_nodes(e))
    # the division contributes a pow_int(-1) pole
    assert ops == ["arsinh", "log", "pow_complex", "pow_int", "sqrt"]


@pytest.mark.parametrize(
    "bad",
    [
        {"op": "nope"},
        {"op": "const", "value": "1"},
        {"op": "exp", "args": []},
        {"op": "pow_int", "args": [{"op": "coord", "name": "x"}], "n": 1.5},
        {"op": "holo", "args": [{"op": "coord", "name": "z"}], "function": {"kind": "mystery"}},
        [1, 2],
    ],
)
def test_malformed_files_rejected(bad):
    with pytest.raises(ValidationError):
        E.from_dict(bad)


coef = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(coef, coef, st.integers(-3, 4))
def test_serialisation_preserves_values(a, b, n):
    x = E.coord("x1")
    e = E.const(a) * E.pow_int(x, n) + E.exp(E.const(b) * x)
    back = E.loads(E.dumps(e))
    env = {"x1": 1.3}
    assert E.evaluate(back, env) == E.evaluate(e, env)
