import math

import numpy as np
import pytest

from polyharm import catalog as K
from polyharm import expr as E
from polyharm.errors import ArgumentError, CatalogLookupError, ValidationError
from polyharm.groups import mu
from polyharm.verifier import SamplePlan, verify_isoparametric, verify_r_harmonic

PARAMS = {"G4.2": {"alpha": -0.7}, "G4.5": {"alpha": 1, "beta": -2, "gamma": 0.5},
          "G4.6": {"alpha": 0.8, "beta": -0.4}, "G4.8": {"alpha": 0.3}, "G4.9": {"alpha": 0.6}}


@pytest.mark.parametrize("name", K.names())
def test_family_matches_representation_table(name, rng):
    entry = K.get_entry(name)
    inst = K.lookup(name, **PARAMS.get(name, {}))
    for _ in range(5):
        t = rng.uniform(-2, 2, inst.spec.m)
        want = entry.mu(inst.params, t)
        got = mu(inst.spec, t)
        assert np.linalg.norm(got - want) <= 1e-12 * np.linalg.norm(want)


def test_lookup_examples():
    g44 = K.lookup("G4.4").spec
    assert g44.kind.value == "abelian" and (g44.m, g44.n) == (1, 3)
    np.testing.assert_array_equal(g44.family[0], [[1, 1, 0], [0, 1, 1], [0, 0, 1]])
    g49 = K.lookup("G4.9", alpha=0).spec
    assert g49.heisenberg
    np.testing.assert_array_equal(g49.family[0], [[0, 1], [-1, 0]])
    g46 = K.lookup("G4.6", alpha=1, beta=0).spec
    np.testing.assert_array_equal(g46.family[0], [[1, 0, 0], [0, 0, 1], [0, -1, 0]])
    assert K.lookup("sol3").spec.omega == (0.0,)
    assert K.lookup("G4.8", alpha=0.5).spec.omega == (3.0,)
    assert K.lookup("G4.5", alpha=1, beta=2, gamma=3).spec.omega == (6.0,)


def test_parameter_validation():
    with pytest.raises(ValidationError, match="alpha >= 0"):
        K.lookup("G4.9", alpha=-1)
    with pytest.raises(ValidationError, match="alpha in"):
        K.lookup("G4.8", alpha=2)
    with pytest.raises(ValidationError):
        K.lookup("G4.2", alpha=0)
    with pytest.raises(ArgumentError):
        K.lookup("Sol3", alpha=1)
    with pytest.raises(CatalogLookupError):
        K.lookup("G9.9")
    with pytest.raises(CatalogLookupError):
        K.builtin("Sol3", "nope")
    with pytest.raises(ArgumentError):
        K.builtin("Sol3", "sol3-arsinh", r=1, bogus=2)


def test_builtin_examples():
    env = {"t1": 0.3, "x1": 0.8, "x2": 0.5, "x3": 1.1, "xi": 0.2}
    f = K.builtin("G4.1", "g41-poly", r=2, coefficients=(1, 0))
    assert E.evaluate(f, env) == pytest.approx(1.1**3)
    f = K.builtin("Sol3", "sol3-arsinh", r=1, coefficients=(1, 0))
    assert E.evaluate(f, env) == pytest.approx(math.asinh(math.exp(-0.3) * 0.8))
    f = K.builtin("G4.9", "g49-harmonic", coefficients=(1, 0), params={"alpha": 1})
    u = math.exp(-0.3) * 0.8
    assert E.evaluate(f, env) == pytest.approx((2 * u**3 + 3 * u) / (u * u + 1) ** 1.5)


def test_erratum_flags_and_notes():
    res = K.builtin_result("G4.9", "g49-harmonic", params={"alpha": 1})
    assert K.FLAG_G49 in res.flags
    res = K.builtin_result("G4.4", "g44-sep", r=1)
    assert {K.FLAG_G44_SIGN, K.FLAG_G44_CUBIC} <= set(res.flags)
    d = K.entry_dict(K.lookup("G4.9", alpha=1))
    assert any("3 alpha^2" in n and "5 alpha^2" in n for n in d["notes"])
    assert d["omega"] == [4.0]


def _all_builtins():
    cases = []
    for name in K.names():
        params = {"G4.9": {"alpha": 1.0}}.get(name, {})
        for b in K.get_entry(name).builtins:
            p = {"alpha": 0.0} if b.id == "g49-xpower" else params
            cases.append((name, b.id, b.claim, p))
    return cases


@pytest.mark.parametrize("name,fid,claim,params", _all_builtins())
def test_every_builtin_matches_its_claim(name, fid, claim, params):
    spec = K.lookup(name, **params).spec
    plan = SamplePlan(count=50)
    printed = fid.endswith("printed")
    if claim == "r_harmonic":
        fixed = {"g49-harmonic": 1, "g49-biharmonic": 2, "g41-product": 3}.get(fid)
        for r in ([fixed] if fixed else [1, 2]):
            res = K.builtin_result(name, fid, r=None if fixed else r, params=params)
            rep = verify_r_harmonic(spec, res.expr, r, plan)
            assert rep.passed != printed, rep.summary()
            if r > 1 and not printed:
                # proper: not (r-1)-harmonic
                assert verify_r_harmonic(spec, res.expr, r - 1, plan).verdict == "fail"
    else:
        res = K.builtin_result(name, fid, params=params)
        assert verify_isoparametric(spec, res.pair, plan, claim=claim).passed


def test_g49_xpower_needs_alpha_zero():
    with pytest.raises(ValidationError):
        K.builtin("G4.9", "g49-xpower", r=1, params={"alpha": 1})
