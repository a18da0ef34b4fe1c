import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyharm.errors import ArgumentError, DomainError
from polyharm.jets import (
    antiderivative,
    compose,
    derivative,
    extract_partial,
    jet_analytic,
    jet_const,
    jet_var,
    multi_indices,
    num_coeffs,
    taylor_coefficients,
    truncate,
)


def test_num_coeffs_matches_enumeration():
    for d in (1, 2, 3):
        for K in range(5):
            assert num_coeffs(d, K) == len(multi_indices(d, K)) == math.comb(d + K, K)


def test_polynomial_partials_exact():
    # f = x^3 y^2 + 2 x y at (2, -1)
    x = jet_var(0, 2.0, 2, 5)
    y = jet_var(1, -1.0, 2, 5)
    f = x**3 * y**2 + 2 * x * y
    assert f.value == pytest.approx(8 - 4)
    assert extract_partial(f, (3, 2)) == pytest.approx(12)  # 3! * 2!
    assert extract_partial(f, (1, 0)) == pytest.approx(3 * 4 * 1 + 2 * -1)
    assert extract_partial(f, (2, 1)) == pytest.approx(6 * 2 * 2 * -1)
    assert extract_partial(f, (0, 3)) == 0


def _fd_partial(fun, z0, k, h=1e-3):
    # 5-point-type central differences of order k along one real direction
    if k == 1:
        return (fun(z0 + h) - fun(z0 - h)) / (2 * h)
    if k == 2:
        return (fun(z0 + h) - 2 * fun(z0) + fun(z0 - h)) / h**2
    raise ValueError


@pytest.mark.parametrize(
    "name,param,z0,ref",
    [
        ("exp", None, 0.3 + 0.2j, cmath.exp),
        ("log", None, 1.7 - 0.4j, cmath.log),
        ("sqrt", None, 0.9 + 0.5j, cmath.sqrt),
        ("sin", None, -0.4 + 0.1j, cmath.sin),
        ("cos", None, 1.1, cmath.cos),
        ("arsinh", None, 0.6 + 0.3j, cmath.asinh),
        ("pow_complex", 0.5 + 1j, 1.3 + 0.2j, lambda z: z ** (0.5 + 1j)),
        ("pow_int", -3, 0.8 + 0.4j, lambda z: z**-3),
    ],
)
def test_primitive_coefficients_vs_finite_differences(name, param, z0, ref):
    c = taylor_coefficients(name, z0, 4, param)
    assert c[0] == pytest.approx(ref(z0), rel=1e-13)
    assert c[1] == pytest.approx(_fd_partial(ref, z0, 1, 1e-5), rel=1e-8)
    assert 2 * c[2] == pytest.approx(_fd_partial(ref, z0, 2, 1e-4), rel=1e-6)


@pytest.mark.parametrize("name", ["log", "sqrt", "arsinh"])
def test_branch_cut_rejected(name):
    z = -1.0 if name != "arsinh" else 2j
    a = jet_var(0, z, 1, 3)
    with pytest.raises(DomainError):
        jet_analytic(name, a)


def test_composition_matches_closed_form():
    # exp(sin(x) y) partials at a point against central differences in 2-d
    def F(x, y):
        return cmath.exp(cmath.sin(x) * y)

    x0, y0 = 0.4, -0.7
    x, y = jet_var(0, x0, 2, 3), jet_var(1, y0, 2, 3)
    J = jet_analytic("exp", jet_analytic("sin", x) * y)
    h = 1e-4
    dxy = (F(x0 + h, y0 + h) - F(x0 + h, y0 - h) - F(x0 - h, y0 + h) + F(x0 - h, y0 - h)) / (4 * h * h)
    assert extract_partial(J, (1, 1)) == pytest.approx(dxy, rel=1e-6)
    dxx = (F(x0 + h, y0) - 2 * F(x0, y0) + F(x0 - h, y0)) / h**2
    assert extract_partial(J, (2, 0)) == pytest.approx(dxx, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=6, max_size=6),
    st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=6, max_size=6),
)
def test_leibniz_rule(ca, cb):
    # second mixed partial of a product from the partials of the factors
    x, y = jet_var(0, 0.3, 2, 2), jet_var(1, -0.2, 2, 2)
    f = ca[0] + ca[1] * x + ca[2] * y + ca[3] * x * x + ca[4] * x * y + ca[5] * y * y
    g = cb[0] + cb[1] * x + cb[2] * y + cb[3] * x * x + cb[4] * x * y + cb[5] * y * y
    P = extract_partial
    lhs = P(f * g, (1, 1))
    rhs = P(f, (1, 1)) * g.value + P(f, (1, 0)) * P(g, (0, 1)) + P(f, (0, 1)) * P(g, (1, 0)) + f.value * P(g, (1, 1))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_truncation_is_prefix_and_commutes_with_products():
    x, y = jet_var(0, 0.5, 2, 5), jet_var(1, 1.5, 2, 5)
    f = jet_analytic("exp", x * y) * jet_analytic("cos", x)
    t = truncate(f, 2)
    x2, y2 = jet_var(0, 0.5, 2, 2), jet_var(1, 1.5, 2, 2)
    g = jet_analytic("exp", x2 * y2) * jet_analytic("cos", x2)
    np.testing.assert_allclose(t.coeffs, g.coeffs, rtol=1e-14)
    with pytest.raises(ArgumentError):
        truncate(t, 3)


def test_derivative_and_antiderivative_invert():
    z = jet_var(0, 0.7 + 0.1j, 1, 6)
    f = jet_analytic("sin", z) * z
    d = derivative(f, 0)
    assert d.order == 5
    back = antiderivative(d, f.value)
    np.testing.assert_allclose(back.coeffs[:6], f.coeffs[:6], rtol=1e-13)


def test_compose_with_polynomial_taylor_series():
    a = jet_var(0, 0.2, 1, 4)
    # f(z) = z^2 around 0.2: coefficients (0.04, 0.4, 1)
    out = compose([0.04, 0.4, 1.0], a)
    np.testing.assert_allclose(out.coeffs, (a * a).coeffs, atol=1e-15)


def test_mismatched_jets_rejected():
    with pytest.raises(ArgumentError):
        jet_var(0, 1.0, 2, 3) + jet_var(0, 1.0, 3, 3)
    with pytest.raises(ArgumentError):
        jet_var(2, 1.0, 2, 3)


def test_constant_lifting():
    a = jet_const(2.0, 2, 3)
    b = 1 + a * 3 - 4
    assert b.value == 3
    assert np.all(b.coeffs[1:] == 0)
