import json

import numpy as np
import pytest

from polyharm import catalog
from polyharm import constructors as C
from polyharm import expr as E
from polyharm import verifier as V
from polyharm.errors import ArgumentError, DomainError, SamplingError
from polyharm.operators import FDResult
from polyharm.verifier import (
    SamplePlan,
    parse_guard,
    sample_points,
    verify_eigenfunction,
    verify_isoparametric,
    verify_r_harmonic,
)

t1, x1, x2, x3 = (E.coord(n) for n in ("t1", "x1", "x2", "x3"))
SMALL = SamplePlan(count=60)


def test_sampling_with_guard(sol3):
    plan = SamplePlan(guards=(parse_guard("x1 > 0.1"),))
    pts = sample_points(sol3, plan)
    assert len(pts) == 200
    assert all(p.x[0] > 0.1 and -1 <= p.t[0] <= 1 and 0.2 <= p.x[1] <= 2 for p in pts)
    assert [p.coords for p in sample_points(sol3, plan)] == [p.coords for p in pts]
    other = sample_points(sol3, SamplePlan(seed=1))
    assert [p.coords for p in other] != [p.coords for p in pts]


def test_impossible_guard_and_bad_input(sol3):
    with pytest.raises(SamplingError):
        sample_points(sol3, SamplePlan(guards=(parse_guard("x1 > 5"),)))
    with pytest.raises(ArgumentError):
        parse_guard("x1 >> 2")
    with pytest.raises(ArgumentError):
        sample_points(sol3, SamplePlan(guards=(parse_guard("y > 0"),)))
    with pytest.raises(ArgumentError):
        sample_points(sol3, SamplePlan(box=[(0, 1)]))


def test_branch_guards_keep_samples_off_cuts(sol3):
    f = E.log(x1 - E.const(1.0))
    rep = verify_r_harmonic(sol3, f, 2, SMALL)
    assert rep.diagnostics["domain_errors"] == 0
    assert any("log" in g for g in rep.plan["guards"])


def test_spec_examples_r_harmonic(sol3):
    f2 = catalog.builtin("Sol3", "sol3-arsinh", r=2)
    assert verify_r_harmonic(sol3, f2, 2).verdict == "pass"
    assert verify_r_harmonic(sol3, f2, 1).verdict == "fail"
    g41 = catalog.lookup("G4.1").spec
    assert verify_r_harmonic(g41, E.pow_int(x3, 5), 3).passed
    rep = verify_r_harmonic(sol3, E.const(2.5), 1)
    assert rep.passed and rep.max_residual == 0
    zero = verify_r_harmonic(sol3, E.const(0), 1)
    assert zero.verdict == "fail"


def test_isoparametric_examples(sol3):
    pair = catalog.builtin_result("Sol3", "sol3-phi").pair
    assert verify_isoparametric(sol3, pair).passed
    bad = C.IsoparametricPair(pair.phi, pair.Phi, (pair.Psi[0] + 1e-3,) + tuple(pair.Psi[1:]))
    assert verify_isoparametric(sol3, bad).verdict == "fail"
    g410 = catalog.lookup("G4.10").spec
    res = catalog.builtin_result("G4.10", "g410-eigen", nu=(1, 0.5))
    assert res.pair.Psi[2] == pytest.approx(1 + 0.25)
    assert verify_isoparametric(g410, res.pair, claim="eigenfunction").passed


def test_eigenfunction_examples(sol3):
    g410 = catalog.lookup("G4.10").spec
    phi = catalog.builtin("G4.10", "g410-eigen", nu=(1, 1))
    assert verify_eigenfunction(g410, phi, 0, 2, SMALL).passed
    assert verify_eigenfunction(sol3, E.const(3), 0, 0, SMALL).passed
    assert verify_eigenfunction(sol3, E.exp(-t1) * x1, 1, 1, SMALL).verdict == "fail"


def test_determinism_and_report_format(sol3):
    f = catalog.builtin("Sol3", "sol3-arsinh", r=2)
    a = verify_r_harmonic(sol3, f, 2, SMALL)
    b = verify_r_harmonic(sol3, f, 2, SMALL)
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert d["schema"] == V.REPORT_SCHEMA and d["verdict"] == "pass"
    assert all(isinstance(r, list) and len(r) == 2 for r in d["residuals"])
    assert set(d) >= {"claim", "spec", "function", "plan", "tolerances", "oracle", "erratum_flags"}


@pytest.mark.parametrize("c", [3.0, -2 + 1j, 1e-6j])
def test_scale_invariance(sol3, c):
    f = catalog.builtin("Sol3", "sol3-arsinh", r=2)
    for r in (1, 2):
        a = verify_r_harmonic(sol3, f, r, SMALL)
        b = verify_r_harmonic(sol3, E.const(c) * f, r, SMALL)
        assert a.verdict == b.verdict
        assert b.relative_residual == pytest.approx(a.relative_residual, rel=1e-6, abs=1e-14)


def test_monotonicity():
    g41 = catalog.lookup("G4.1").spec
    for r in (1, 2, 3):
        f = catalog.builtin("G4.1", "g41-poly", r=r)
        assert verify_r_harmonic(g41, f, r, SMALL).passed
        # tau^(r+1) = 0 still holds, but properness fails one step up
        up = verify_r_harmonic(g41, f, r + 1, SMALL)
        assert up.verdict != "pass"
        assert up.max_residual <= 1e-8 * up.scale


def test_oracle_disagreement_is_inconclusive(sol3, monkeypatch):
    real = V.tau_fd_with_scale

    def skewed(spec, f, p, *a, **k):
        r = real(spec, f, p, *a, **k)
        return FDResult(r.value + 0.01 * max(r.scale, 1.0), r.scale, r.noise)

    monkeypatch.setattr(V, "tau_fd_with_scale", skewed)
    rep = verify_r_harmonic(sol3, catalog.builtin("Sol3", "sol3-arsinh", r=1), 1, SMALL)
    assert rep.verdict == "inconclusive" and not rep.oracle["agreed"]


def test_domain_errors_make_inconclusive(sol3, monkeypatch):
    calls = {"n": 0}
    real = V.tau_iter

    def flaky(spec, f, p, r):
        calls["n"] += 1
        if calls["n"] % 4:
            raise DomainError("synthetic")
        return real(spec, f, p, r)

    monkeypatch.setattr(V, "tau_iter", flaky)
    rep = verify_r_harmonic(sol3, E.exp(-t1) * x1, 1, SMALL)
    assert rep.verdict == "inconclusive"
    assert rep.diagnostics["domain_errors"] == 45


def test_full_oracle_flag(sol3):
    plan = SamplePlan(count=30, full_oracle=True)
    rep = verify_r_harmonic(sol3, catalog.builtin("Sol3", "sol3-arsinh", r=2), 2, plan)
    assert rep.oracle["points"] == 30 and rep.passed
