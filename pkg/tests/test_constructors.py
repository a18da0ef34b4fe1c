import cmath
import math

import numpy as np
import pytest

from polyharm import catalog
from polyharm import constructors as C
from polyharm import expr as E
from polyharm.errors import ArgumentError, CapabilityError, DomainError, ValidationError
from polyharm.groups import Point
from polyharm.linalg import common_eigenvectors
from polyharm.operators import kappa, tau_iter
from polyharm.verifier import SamplePlan, verify_isoparametric, verify_r_harmonic

Z = E.coord("z")


def at(e, z):
    return E.evaluate(e, {"z": z})


def _ode_ok(lad, zs, tol=1e-10):
    for z in zs:
        for k in range(1, lad.r + 1):
            res, sc = lad.ode_residual(z, k)
            assert abs(res) <= tol * max(sc, 1e-300), (k, z, res, sc)


def _proper(lad, z=0.8 + 0.3j):
    # top level is not annihilated one step early
    assert abs(at(lad.level(lad.r - 1), z)) > 0 or lad.r == 1


# -------------------------------------------------------- eigenvector pairs


def test_sol3_and_g41_eigenvector_pairs():
    sol3 = catalog.lookup("Sol3").spec
    pairs = {round(p.lam[0].real): p for p in common_eigenvectors(sol3.family)}
    pr = C.isoparametric_from_eigenvector(sol3, pairs[1])
    assert C._trim(pr.Phi) == (0, 1) and C._trim(pr.Psi) == (1, 0, 1)
    g41 = catalog.lookup("G4.1").spec
    (ep,) = common_eigenvectors(g41.family)
    pr = C.isoparametric_from_eigenvector(g41, ep)
    assert C._trim(pr.Phi) == () and C._trim(pr.Psi) == (1,)


def test_non_eigenvector_rejected(sol3):
    with pytest.raises(ValidationError):
        C.isoparametric_from_eigenvector(sol3, [1, 1])
    with pytest.raises(ArgumentError):
        C.isoparametric_from_eigenvector(sol3, [1, 0, 0])


def test_isotropic_eigenfunction_nu_zero():
    spec = catalog.lookup("G4.10").spec
    pr = C.eigenfunction_isotropic(spec, [1, 1j], [0, 0])
    p = Point.from_coords(spec, [0.3, -0.2, 0.7, 1.1])
    assert abs(tau_iter(spec, pr.phi, p, 1).values[1]) < 1e-14
    assert abs(kappa(spec, pr.phi, pr.phi, p)) < 1e-14
    with pytest.raises(ArgumentError):
        C.eigenfunction_isotropic(spec, [1, 0.5j], [0, 0])


def test_re_im_parts_pass(g49):
    for pr in C.re_im_parts(g49, [1, 1j]):
        assert C._trim(pr.Phi) == (0, 5)  # 5 alpha^2 at alpha = 1
        assert verify_isoparametric(g49, pr, SamplePlan(count=50)).passed


# --------------------------------------------------------- eigen ladders


def test_eigen_ladder_cases():
    lad = C.fr_eigenfunction(2, 0, 3, c=(1, 0))
    z = 1.3 + 0.4j
    assert at(lad.f_r, z) == pytest.approx(cmath.log(z) ** 2)
    lad = C.fr_eigenfunction(1, 1, 1, c=(2, 3))
    assert at(lad.f_r, z) == pytest.approx(2 * cmath.log(z) + 3)
    lad = C.fr_eigenfunction(3, 1, 2, c=(1, 1))
    assert at(lad.f_r, z) == pytest.approx(z**-2 * cmath.log(z) + cmath.log(z))
    for lam, mu_ in ((2, 0), (1, 1), (3, 1), (0.5 + 1j, 2 - 1j)):
        for r in (1, 2, 3, 4):
            lad = C.fr_eigenfunction(lam, mu_, r, c=(1, 0.5))
            _ode_ok(lad, [0.9 + 0.2j, 1.7 - 0.5j])
    with pytest.raises(ArgumentError):
        C.fr_eigenfunction(0, 0, 2)


def test_psi_zero_cases():
    lad = C.fr_psi_zero([-3.0], 2, c=1.0)
    assert at(lad.f_r, 0.7) == pytest.approx(0.7 / -3.0)
    lad = C.fr_psi_zero([0, 2], 3, c=1.0)
    z = 0.8 + 0.1j
    assert at(lad.f_r, z) == pytest.approx((cmath.log(z) / 2) ** 2)
    assert at(C.fr_psi_zero([1, 0, -1], 1).f_r, z) == 1
    lad = C.fr_psi_zero([1, 0, -1], 3)  # simple roots +-1: partial fractions
    _ode_ok(lad, [0.3 + 0.2j, -0.4 + 0.5j])
    with pytest.raises(CapabilityError):
        C.fr_psi_zero([1, 2, 1], 2)  # double root


def test_linear_quadratic_cases():
    lad = C.fr_linear_quadratic(1, 1, 1, 1, c=(1, 2))
    assert at(lad.f_r, 0.6) == pytest.approx(math.asinh(0.6) + 2)
    lad = C.fr_linear_quadratic(1, 1, 1, 2, c=(1, 1))
    assert at(lad.f_r, 0.6) == pytest.approx(math.asinh(0.6) ** 3 + math.asinh(0.6) ** 2)
    a = 0.7
    lad = C.fr_linear_quadratic(5 * a * a, a * a, 1, 1, c=(1, 0))
    z = 0.9
    want = (2 * (a * z) ** 3 + 3 * a * z) / ((a * z) ** 2 + 1) ** 1.5
    assert at(lad.f_r, z) == pytest.approx(want)
    for lam, mu_, nu in ((1, 1, 1), (3, 1, 2), (5, 1, 1), (5 * a * a, a * a, 1), (2 + 1j, 2 + 1j, 0.5)):
        for r in (1, 2):
            lad = C.fr_linear_quadratic(lam, mu_, nu, r, c=(1, 0.7))
            _ode_ok(lad, [0.4 + 0.1j, 0.9 - 0.2j])
    _ode_ok(C.fr_linear_quadratic(1, 1, 1, 4), [0.5, 0.6j])
    with pytest.raises(CapabilityError):
        C.fr_linear_quadratic(2, 1, 1, 2)
    with pytest.raises(CapabilityError):
        C.fr_linear_quadratic(3, 1, 1, 3)


# ---------------------------------------------------------- numeric ladder


def test_numeric_ladder_matches_closed_form():
    num = C.fr_numeric((0, 1), (1, 0, 1), 3, z0=0.0)
    ref = C.fr_linear_quadratic(1, 1, 1, 3)
    for z in (0.5, 0.3 + 0.6j, 1.5):
        # c = (1, 0): f_1 = integral of Lambda = arsinh
        assert at(num.level(1), z) == pytest.approx(math.asinh(z) if isinstance(z, float) else cmath.asinh(z), rel=1e-10)
    _ode_ok(num, [0.5, 0.3 + 0.6j], tol=1e-8)
    assert num.provenance is C.Provenance.NUMERIC and ref.provenance is C.Provenance.LINEAR_QUADRATIC


def test_numeric_ladder_general_case_and_serialisation():
    num = C.fr_numeric((0.3, 2), (1, 0.2, 1), 2, z0=0.0)
    _ode_ok(num, [0.4 + 0.2j, 0.8], tol=1e-8)
    back = E.loads(E.dumps(num.f_r))
    assert at(back, 0.6) == pytest.approx(at(num.f_r, 0.6), rel=1e-14)


def test_numeric_ladder_refuses_psi_zero_on_path():
    num = C.fr_numeric((0, 1), (1, 0, 1), 1, z0=0.0)
    with pytest.raises(DomainError):
        at(num.f_r, 2j)  # Psi(i) = 0 on the segment
    with pytest.raises(ArgumentError):
        C.fr_numeric((0, 1), (1, 0, 1), 5, z0=0.0)


# ------------------------------------------------------ t and x factors


def test_t_power_factor_examples():
    sol3 = catalog.lookup("Sol3").spec
    f = C.t_power_factor(sol3, 1, 2, c=(1, 1))
    assert E.evaluate(f, {"t1": 0.5}) == pytest.approx(0.125 + 0.25)
    g44 = catalog.lookup("G4.4").spec
    f = C.t_power_factor(g44, 1, 1, c=(2, 1))
    assert E.evaluate(f, {"t1": 0.2}) == pytest.approx(2 * math.exp(0.6) + 1)
    for alpha in (-1.0, 0.5):
        g48 = catalog.lookup("G4.8", alpha=alpha).spec
        for r in (1, 2, 3):
            f = C.t_power_factor(g48, 1, r, c=(1, 1))
            assert verify_r_harmonic(g48, f, r, SamplePlan(count=40)).passed


def test_quadratic_harmonic():
    g44 = catalog.lookup("G4.4").spec
    B = np.array([[0, 0, -1], [0, 1, 0], [-1, 0, -1]])  # x2^2 - x3^2 - 2 x1 x3
    psi = C.quadratic_harmonic(g44, 1, 0, (1, 1, 1), B)
    assert verify_r_harmonic(g44, psi, 1, SamplePlan(count=40)).passed
    with pytest.raises(ValidationError):
        C.quadratic_harmonic(g44, B=np.diag([1.0, 0, 0]))
    g48 = catalog.lookup("G4.8", alpha=0.3).spec
    off = [[0, 0.5], [0.5, 0]]
    assert verify_r_harmonic(g48, C.quadratic_harmonic(g48, 1, 2, (1, 1), off), 1, SamplePlan(count=40)).passed
    with pytest.raises(ArgumentError):
        C.quadratic_harmonic(catalog.lookup("Sol3").spec, b=1)


def test_separated_product_orders():
    g41 = catalog.lookup("G4.1").spec
    phi_t = C.t_power_factor(g41, 1, 2, c=(1, 1))
    prod, order = C.separated_product(g41, phi_t, 2, E.pow_int(E.coord("x3"), 3), 2)
    assert order == 3
    assert verify_r_harmonic(g41, prod, 3, SamplePlan(count=40)).passed
    same, q = C.separated_product(g41, E.const(1), 1, E.coord("x3"), 1)
    assert q == 1 and same == E.coord("x3")
    with pytest.raises(ValidationError):
        C.separated_product(g41, E.coord("x1"), 1, E.coord("x3"), 1)
    sol3 = catalog.lookup("Sol3").spec
    with pytest.raises(ValidationError):
        # tau(arsinh(e^-t x1)^3) depends on t
        C.separated_product(sol3, E.coord("t1"), 1, E.pow_int(E.exp(-E.coord("t1")) * E.coord("x1"), 3), 1)
