import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyharm import catalog
from polyharm import expr as E
from polyharm.errors import ArgumentError
from polyharm.groups import Point, a_scalar, mu
from polyharm.linalg import heisenberg_J
from polyharm.operators import (
    chain_rule_residual,
    coefficient_jets,
    eval_jet,
    kappa,
    product_rule_residual,
    tau_fd,
    tau_fd_with_scale,
    tau_iter,
    tau_jet,
)

t1, x1, x2, x3, xi = (E.coord(n) for n in ("t1", "x1", "x2", "x3", "xi"))


def tau(spec, f, p):
    return tau_iter(spec, f, p, 1).values[1]


def test_sol3_example_values(sol3):
    # phi = e^-t x1: tau(phi) = phi and kappa(phi, phi) = phi^2 + 1
    p = Point.from_coords(sol3, [0.3, 1.2, -0.4])
    phi = E.exp(-t1) * x1
    v = math.exp(-0.3) * 1.2
    assert tau(sol3, phi, p) == pytest.approx(v, rel=1e-14)
    assert kappa(sol3, phi, phi, p) == pytest.approx(v * v + 1, rel=1e-14)


@pytest.mark.parametrize("name,params,omega", [("Sol3", {}, 0.0), ("G4.4", {}, 3.0), ("G4.8", {"alpha": 0.5}, 3.0),
                                               ("G4.9", {"alpha": 1.0}, 4.0)])
def test_drift_equation(name, params, omega):
    spec = catalog.lookup(name, **params).spec
    assert spec.omega[0] == pytest.approx(omega)
    c = 0.7
    p = Point.from_coords(spec, [0.2] + [0.5] * (spec.dim - 1))
    f = E.exp(E.const(c) * t1)
    assert tau(spec, f, p) == pytest.approx((c * c - omega * c) * math.exp(c * 0.2), rel=1e-13)


def test_g41_polynomial_tower():
    spec = catalog.lookup("G4.1").spec
    p = Point.from_coords(spec, [0.4, 0.3, -0.8, 1.1])
    vals = tau_iter(spec, E.pow_int(x3, 5), p, 3).values
    np.testing.assert_allclose(vals, [1.1**5, 20 * 1.1**3, 120 * 1.1, 0], atol=1e-12)


def test_heisenberg_xi_coefficients():
    spec = catalog.lookup("G4.7").spec
    p = Point.from_coords(spec, [0.3, 0.1, 0.6, -0.5])
    U = mu(spec, p.t)
    Jx = heisenberg_J(1) @ np.array(p.x)
    want = 2 * (a_scalar(spec, p.t) ** 2 + 0.25 * np.sum((U.T @ Jx) ** 2))
    assert tau(spec, xi * xi, p) == pytest.approx(want, rel=1e-13)
    b = U @ U.T @ Jx
    # xi x1: second-order mixed coefficient b_1
    assert tau(spec, xi * x1, p) == pytest.approx(b[0], rel=1e-12)


def test_linearity_and_kappa_symmetry(g49, rng):
    f = E.sin(x1 * t1) + E.exp(xi) * x2
    g = E.pow_int(x2, 3) * E.cos(t1)
    a, b = 0.3 - 1.2j, 2.0 + 0.5j
    for _ in range(5):
        p = Point.from_coords(g49, rng.uniform(0.2, 1.5, 4))
        lhs = tau(g49, E.const(a) * f + E.const(b) * g, p)
        assert lhs == pytest.approx(a * tau(g49, f, p) + b * tau(g49, g, p), rel=1e-12)
        assert kappa(g49, f, g, p) == kappa(g49, g, f, p)
        # bilinear, no conjugation
        assert kappa(g49, E.const(1j) * f, f, p) == pytest.approx(1j * kappa(g49, f, f, p), rel=1e-13)


def test_one_dimensional_reduction():
    # a function of t alone sees only d2/dt2 - omega d/dt
    spec = catalog.lookup("G4.5", alpha=1, beta=2, gamma=-0.5).spec
    p = Point.from_coords(spec, [0.4, 1, 1, 1])
    f = E.pow_int(t1, 4)
    w = spec.omega[0]
    assert tau(spec, f, p) == pytest.approx(12 * 0.4**2 - w * 4 * 0.4**3, rel=1e-13)


@pytest.mark.parametrize("name,params", [("Sol3", {}), ("G4.3", {}), ("G4.7", {}), ("G4.8", {"alpha": -1}), ("G4.10", {})])
def test_jet_agrees_with_finite_differences(name, params, rng):
    spec = catalog.lookup(name, **params).spec
    names = spec.coord_names
    f = E.exp(E.const(0.4) * E.coord(names[0])) * E.sin(E.coord(names[-1]) * E.coord(names[1])) + E.pow_int(E.coord(names[-2]), 3)
    for _ in range(4):
        p = Point.from_coords(spec, rng.uniform(0.2, 1.2, spec.dim))
        fd = tau_fd_with_scale(spec, f, p)
        assert abs(fd.value - tau(spec, f, p)) <= 1e-6 * max(fd.scale, 1.0)
        assert abs(tau_fd(spec, f, p) - fd.value) <= 1e-5 * max(fd.scale, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(0.2, 2), st.floats(0.2, 2), st.floats(-1, 1))
def test_product_and_chain_rules(t, a, b, x):
    spec = catalog.lookup("G4.9", alpha=0.7).spec
    p = Point.from_coords(spec, [t, x, a, b])
    f = E.exp(-t1) * x1 + E.log(x2)
    g = E.cos(xi * x2) + t1 * t1
    res, sc = product_rule_residual(spec, f, g, p)
    assert abs(res) <= 1e-11 * sc
    res, sc = chain_rule_residual(spec, E.exp(E.const(0.5) * E.coord("z")) + E.pow_int(E.coord("z"), 3), f, p)
    assert abs(res) <= 1e-11 * sc


def test_errors(sol3):
    p = Point.from_coords(sol3, [0, 1, 1])
    with pytest.raises(ArgumentError):
        tau(sol3, xi, p)
    with pytest.raises(ArgumentError):
        tau_iter(sol3, x1, p, 0)
    with pytest.raises(ArgumentError):
        tau_jet(sol3, eval_jet(x1, sol3, p, 1), coefficient_jets(sol3, p, 0))
    assert eval_jet(x1, sol3, p, 0).value == 1


def test_fd_oracle_examples(sol3, rng):
    p0 = Point.from_coords(sol3, [0.0, 2.0, 0.0])
    assert abs(tau_fd(sol3, E.exp(-t1) * x1, p0) - 2) <= 1e-6
    # stencil truncation is exactly zero here; at h=1e-4 roundoff alone is ~eps*|f|/h^2 ~ 1e-7
    assert abs(tau_fd(sol3, E.const(2) * x1 - E.const(3) * x2 + 1, p0, h=1e-3)) <= 1e-8
    for _ in range(10):
        c = rng.normal(size=4)
        f = E.const(c[0]) * E.pow_int(x1, 3) * x2 + E.const(c[1]) * t1 * t1 * x2 + E.const(c[2]) * E.pow_int(t1, 4) + E.const(c[3]) * x1
        p = Point.from_coords(sol3, rng.uniform(-1, 1, 3))
        want = tau(sol3, f, p)
        assert abs(tau_fd(sol3, f, p, h=1e-4) - want) <= 1e-6 * max(1.0, abs(want))
        # Richardson-combined steps are markedly closer
        assert abs(tau_fd_with_scale(sol3, f, p).value - want) <= 1e-8 * max(1.0, abs(want))


def test_kappa_and_product_examples(sol3):
    p0 = Point.from_coords(sol3, [0.0, 2.0, 0.0])
    phi = E.exp(-t1) * x1
    assert kappa(sol3, phi, phi, p0) == pytest.approx(5)
    assert kappa(sol3, E.const(3), phi, p0) == 0
    g410 = catalog.lookup("G4.10").spec
    nu = (0.4 - 0.2j, 1.1)
    f = E.exp(-(E.const(nu[0]) * t1 + E.const(nu[1]) * E.coord("t2"))) * (x1 + E.const(1j) * x2)
    q = Point.from_coords(g410, [0.2, -0.3, 0.9, 0.4])
    v = eval_jet(f, g410, q, 0).value
    assert kappa(g410, f, f, q) == pytest.approx((nu[0] ** 2 + nu[1] ** 2) * v * v, rel=1e-13)
    pt = Point.from_coords(sol3, [0.0, 0.7, 0.3])
    assert tau(sol3, x1 * x1, pt) == pytest.approx(2 * kappa(sol3, x1, x1, pt)) == pytest.approx(2)
    res, _ = product_rule_residual(sol3, E.const(4), phi, pt)
    assert res == 0
