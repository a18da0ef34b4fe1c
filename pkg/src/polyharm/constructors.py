"""Constructions of isoparametric functions, eigenfunctions and r-harmonic ladders.

A ladder is a chain ``f_1, ..., f_r`` of holomorphic functions of one
variable ``z`` with ``Psi f_k'' + Phi f_k' = f_{k-1}`` and ``f_0 = 0``; composing
``f_r`` with an isoparametric ``phi`` (data ``Phi``, ``Psi``) then gives a
proper r-harmonic function whenever ``f_1`` is non-constant or non-zero.
"""

from __future__ import annotations

import cmath
import enum
import math
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.stats import qmc

from . import expr as E
from .errors import ArgumentError, CapabilityError, DomainError, NumericalError, ValidationError
from .expr import FieldExpr
from .groups import GroupSpec, Point, mu
from .jets import Jet, antiderivative, jet_analytic, jet_var
from .linalg import EigenPair

__all__ = [
    "IsoparametricPair",
    "HolomorphicLadder",
    "Provenance",
    "poly_eval",
    "poly_expr",
    "isoparametric_from_eigenvector",
    "eigenfunction_isotropic",
    "re_im_parts",
    "fr_eigenfunction",
    "fr_psi_zero",
    "fr_linear_quadratic",
    "fr_numeric",
    "NumericLadderFunction",
    "t_power_factor",
    "quadratic_harmonic",
    "separated_product",
]

Z = E.coord("z")
ISOTROPY_TOL = 1e-10


def _c(v) -> complex:
    return complex(v)


def _coeff_pair(c) -> tuple[complex, complex]:
    if isinstance(c, (int, float, complex)):
        c = (c, 0.0)
    c = tuple(complex(v) for v in c)
    if len(c) != 2:
        raise ArgumentError(f"expected two coefficients (c1, c2), got {len(c)}")
    if c == (0, 0):
        raise ArgumentError("coefficients c must not both vanish")
    return c


def _trim(p: Sequence[complex]) -> tuple:
    p = [complex(v) for v in p]
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


def poly_eval(coeffs: Sequence[complex], z):
    """Horner evaluation, coefficients low-to-high; works on scalars and jets."""
    out = 0.0 * z
    for c in reversed(coeffs):
        out = out * z + c
    return out


def poly_expr(coeffs: Sequence[complex], e: FieldExpr) -> FieldExpr:
    terms = []
    for k, c in enumerate(coeffs):
        if c == 0:
            continue
        if k == 0:
            terms.append(E.const(c))
        else:
            base = e if k == 1 else E.pow_int(e, k)
            terms.append(base if c == 1 else E.const(c) * base)
    return E.add(*terms) if terms else E.const(0)


def _fmt_poly(p) -> str:
    return str(poly_expr(p, Z)) if p else "0"


@dataclass(frozen=True)
class IsoparametricPair:
    """``tau(phi) = Phi(phi)`` and ``kappa(phi, phi) = Psi(phi)``."""

    phi: FieldExpr
    Phi: tuple
    Psi: tuple
    note: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "Phi", tuple(complex(v) for v in self.Phi))
        object.__setattr__(self, "Psi", tuple(complex(v) for v in self.Psi))

    def describe(self) -> str:
        return f"Phi(z) = {_fmt_poly(_trim(self.Phi))}, Psi(z) = {_fmt_poly(_trim(self.Psi))}"


class Provenance(str, enum.Enum):
    EIGENFUNCTION = "eigenfunction_closed_form"
    LINEAR_QUADRATIC = "linear_quadratic_closed_form"
    PSI_ZERO = "psi_zero_closed_form"
    NUMERIC = "numeric_quadrature"


@dataclass(frozen=True)
class HolomorphicLadder:
    """``chain[k-1]`` is ``f_k`` as an expression in ``z``; ``f_r`` is the last entry."""

    r: int
    chain: tuple
    Phi: tuple
    Psi: tuple
    provenance: Provenance
    z0: complex | None = None
    note: str = ""

    @property
    def f_r(self) -> FieldExpr:
        return self.chain[-1]

    def level(self, k: int) -> FieldExpr:
        if k == 0:
            return E.const(0)
        if not 1 <= k <= self.r:
            raise ArgumentError(f"ladder level {k} outside 0..{self.r}")
        return self.chain[k - 1]

    def compose(self, phi: FieldExpr, k: int | None = None) -> FieldExpr:
        return E.substitute(self.level(self.r if k is None else k), {"z": phi})

    def ode_residual(self, z: complex, k: int | None = None) -> tuple[complex, float]:
        """``Psi f_k'' + Phi f_k' - f_{k-1}`` at ``z`` and the largest term magnitude."""
        k = self.r if k is None else k
        jz = jet_var(0, complex(z), 1, 2)
        fk = E.eval_jets(self.level(k), {"z": jz})
        prev = E.evaluate(self.level(k - 1), {"z": z})
        a = poly_eval(self.Psi, complex(z)) * 2 * fk.coeffs[2]
        b = poly_eval(self.Phi, complex(z)) * fk.coeffs[1]
        return a + b - prev, max(abs(a), abs(b), abs(prev))


# -------------------------------------------------------------- isoparametric


def _bilinear(a, b) -> complex:
    return complex(np.sum(np.asarray(a, dtype=complex) * np.asarray(b, dtype=complex)))


def _linear_form(coeffs, names) -> FieldExpr:
    terms = [E.const(c) * E.coord(nm) for c, nm in zip(coeffs, names) if c != 0]
    return E.add(*terms) if terms else E.const(0)


def _exp_t(spec: GroupSpec, nu) -> FieldExpr | None:
    lin = [(-complex(v), f"t{k + 1}") for k, v in enumerate(nu) if v != 0]
    if not lin:
        return None
    return E.exp(_linear_form([c for c, _ in lin], [nm for _, nm in lin]))


def _times(a: FieldExpr | None, b: FieldExpr) -> FieldExpr:
    return b if a is None else a * b


def _verified(spec: GroupSpec, v) -> EigenPair:
    p = EigenPair.from_vector(spec.family, v)
    scale = max(max(np.linalg.norm(A) for A in spec.family), 1.0)
    if p.residual > 1e-8 * scale * max(np.linalg.norm(p.v), 1.0):
        raise ValidationError(
            f"vector {np.round(p.v, 6).tolist()} is not a common eigenvector of the transposed "
            f"family (residual {p.residual:.3e})"
        )
    return p


def isoparametric_from_eigenvector(spec: GroupSpec, pair: EigenPair | Sequence) -> IsoparametricPair:
    """``phi = exp(-<lam, t>) <v, x>`` with ``Phi = <lam, lam + omega> z`` and
    ``Psi = <lam, lam> z^2 + <v, v>`` (bilinear pairing, no conjugation)."""
    v = pair.v if isinstance(pair, EigenPair) else pair
    if len(v) != spec.x_size:
        raise ArgumentError(f"eigenvector needs {spec.x_size} entries, got {len(v)}")
    p = _verified(spec, v)
    lam = p.lam
    xs = [f"x{i + 1}" for i in range(spec.x_size)]
    phi = _times(_exp_t(spec, lam), _linear_form(p.v, xs))
    Phi = (0, _bilinear(lam, lam + np.array(spec.omega)))
    Psi = (_bilinear(p.v, p.v), 0, _bilinear(lam, lam))
    return IsoparametricPair(phi, Phi, Psi, note=f"eigenvector {np.round(p.v, 12).tolist()}")


def _isotropic(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    q = _bilinear(v, v)
    if abs(q) > ISOTROPY_TOL * max(np.vdot(v, v).real, 1.0):
        raise ArgumentError(f"eigenvector is not isotropic: <v, v> = {q:.6g}")
    return v


def eigenfunction_isotropic(spec: GroupSpec, v, nu: Sequence[complex]) -> IsoparametricPair:
    """``phi = exp(-<nu, t>) <v, x>`` for isotropic ``v``; ``nu`` is arbitrary."""
    v = _isotropic(v)
    p = _verified(spec, v)
    nu = np.asarray(nu, dtype=complex)
    if nu.shape != (spec.m,):
        raise ArgumentError(f"nu needs {spec.m} entries, got {nu.shape}")
    xs = [f"x{i + 1}" for i in range(spec.x_size)]
    phi = _times(_exp_t(spec, nu), _linear_form(p.v, xs))
    Phi = (0, _bilinear(nu, nu + np.array(spec.omega)))
    Psi = (0, 0, _bilinear(nu, nu))
    return IsoparametricPair(phi, Phi, Psi, note=f"isotropic eigenvector, nu = {nu.tolist()}")


def re_im_parts(spec: GroupSpec, pair: EigenPair | Sequence) -> tuple[IsoparametricPair, IsoparametricPair]:
    """Real and imaginary parts of ``exp(-<Re lam, t>) <v, x>`` for isotropic ``v``."""
    v = _isotropic(pair.v if isinstance(pair, EigenPair) else pair)
    p = _verified(spec, v)
    lr = p.lam.real
    xs = [f"x{i + 1}" for i in range(spec.x_size)]
    ef = _exp_t(spec, lr)
    Phi = (0, float(np.dot(lr, lr + np.array(spec.omega))))
    Psi = (0.5 * np.vdot(p.v, p.v).real, 0, float(np.dot(lr, lr)))
    out = []
    for part, lab in ((p.v.real, "real"), (p.v.imag, "imaginary")):
        phi = _times(ef, _linear_form(part, xs))
        out.append(IsoparametricPair(phi, Phi, Psi, note=f"{lab} part"))
    return out[0], out[1]


# ------------------------------------------------------ eigenfunction ladders


@dataclass(frozen=True)
class _LogPoly:
    """``P(w) + z^beta Q(w)`` with ``w = log z``; the ladder operator of
    ``Phi = lam z``, ``Psi = mu z^2`` acts on the polynomial parts exactly."""

    P: tuple
    Q: tuple
    beta: complex

    def apply(self, lam: complex, mu: complex) -> "_LogPoly":
        dP, ddP = _pder(self.P), _pder(_pder(self.P))
        dQ, ddQ = _pder(self.Q), _pder(_pder(self.Q))
        P = _padd(_pscale(ddP, mu), _pscale(dP, lam - mu))
        Q = _padd(_pscale(ddQ, mu), _pscale(dQ, mu * self.beta))
        return _LogPoly(P, Q, self.beta)

    def is_zero(self) -> bool:
        return not self.P and not self.Q

    def to_expr(self) -> FieldExpr:
        w = E.log(Z)
        terms = []
        if self.P:
            terms.append(poly_expr(self.P, w))
        if self.Q:
            b = self.beta
            if b.imag == 0 and float(b.real).is_integer():
                zb = E.pow_int(Z, int(b.real))
            else:
                zb = E.pow_complex(Z, b)
            terms.append(zb * poly_expr(self.Q, w))
        return E.add(*terms) if terms else E.const(0)


def _pder(p):
    return _trim([k * p[k] for k in range(1, len(p))])


def _pscale(p, s):
    return _trim([s * c for c in p]) if s != 0 else ()


def _padd(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def _mono(k: int, c: complex) -> tuple:
    return _trim([0] * k + [c])


def fr_eigenfunction(lam: complex, mu_: complex, r: int, c=(1.0, 0.0)) -> HolomorphicLadder:
    """Closed-form ladder for an eigenfunction (``Phi = lam z``, ``Psi = mu z^2``)."""
    lam, mu_ = complex(lam), complex(mu_)
    if r < 1:
        raise ArgumentError("r must be >= 1")
    if lam == 0 and mu_ == 0:
        raise ArgumentError("lam = mu = 0: the ladder degenerates (z itself is harmonic)")
    c1, c2 = _coeff_pair(c)
    if mu_ == 0:
        top = _LogPoly(_mono(r - 1, c1 if c1 != 0 else c2), (), 0j)
        case = "mu = 0: c log(z)^(r-1)"
    elif lam == mu_:
        top = _LogPoly(_padd(_mono(2 * r - 1, c1), _mono(2 * r - 2, c2)), (), 0j)
        case = "lam = mu: c1 log(z)^(2r-1) + c2 log(z)^(2r-2)"
    else:
        beta = 1 - lam / mu_
        top = _LogPoly(_mono(r - 1, c2), _mono(r - 1, c1), beta)
        case = f"c1 z^(1 - lam/mu) log(z)^(r-1) + c2 log(z)^(r-1), 1 - lam/mu = {beta:.6g}"
    forms = [top]
    for _ in range(r - 1):
        forms.append(forms[-1].apply(lam, mu_))
    if forms[-1].is_zero() or not forms[-1].apply(lam, mu_).is_zero():
        raise NumericalError("eigenfunction ladder failed its exactness check")
    chain = tuple(f.to_expr() for f in reversed(forms))
    return HolomorphicLadder(r, chain, (0, lam), (0, 0, mu_), Provenance.EIGENFUNCTION, note=case)


# ---------------------------------------------------------------- Psi == 0


def fr_psi_zero(Phi: Sequence[complex], r: int, c: complex = 1.0) -> HolomorphicLadder:
    """``f_r = c H^(r-1)`` with ``H' = 1/Phi`` (the ``Psi = 0`` case).

    ``H`` is closed form for constant ``Phi`` and, by partial fractions, for
    any ``Phi`` with simple roots.
    """
    Phi = _trim(Phi)
    if not Phi:
        raise ArgumentError("Phi must not vanish identically")
    if r < 1:
        raise ArgumentError("r must be >= 1")
    c = complex(c)
    if c == 0:
        raise ArgumentError("c must be non-zero")
    if len(Phi) == 1:
        H = Z * E.const(1 / Phi[0])
    else:
        roots = np.roots(list(reversed(Phi)))
        sep = min((abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1 :]), default=math.inf)
        # a double root splits by ~sqrt(eps) under np.roots, a triple by ~eps^(1/3)
        if sep < 1e-4 * max(1.0, max(abs(roots))):
            raise CapabilityError("Phi has a repeated root; the antiderivative of 1/Phi is not implemented")
        dPhi = _pder(Phi)
        terms = []
        for z_i in roots:
            rho = 1 / poly_eval(dPhi, complex(z_i))
            arg = Z if abs(z_i) < 1e-14 else Z - E.const(complex(z_i))
            terms.append(E.const(rho) * E.log(arg))
        H = E.add(*terms)
    chain = []
    for k in range(1, r + 1):
        # L H^j = j H^(j-1), so f_k = c (r-1)!/(k-1)! H^(k-1)
        coef = c * math.factorial(r - 1) / math.factorial(k - 1)
        chain.append(E.const(coef) if k == 1 else E.const(coef) * (H if k == 2 else E.pow_int(H, k - 1)))
    return HolomorphicLadder(r, tuple(chain), Phi, (), Provenance.PSI_ZERO, note="f_r = c H^(r-1), H' = 1/Phi")


# --------------------------------------------------- Phi = lam z, Psi = mu z^2 + nu


def fr_linear_quadratic(
    lam: complex,
    mu_: complex,
    nu: complex,
    r: int,
    c=(1.0, 0.0),
    numeric: bool = False,
    z0: complex = 0.0,
) -> HolomorphicLadder:
    """Closed-form ladders for ``Phi = lam z``, ``Psi = mu z^2 + nu``.

    With ``u = sqrt(mu/nu) z`` the operator becomes ``mu((1+u^2)F'' + 2e u F')``
    where ``e = lam/(2 mu)``.  Closed forms exist for ``e = 1/2`` (any r) and
    ``e = 3/2, 5/2`` (r <= 2); other cases need ``numeric=True``.
    """
    lam, mu_, nu = complex(lam), complex(mu_), complex(nu)
    if r < 1:
        raise ArgumentError("r must be >= 1")
    if nu == 0:
        raise ArgumentError("nu = 0 is the eigenfunction case; use fr_eigenfunction")
    if mu_ == 0:
        raise ArgumentError("mu must be non-zero")
    c1, c2 = _coeff_pair(c)
    e = lam / (2 * mu_)
    Phi, Psi = (0, lam), (nu, 0, mu_)
    k = cmath.sqrt(mu_ / nu)
    u = Z if k == 1 else E.const(k) * Z
    s = E.arsinh(u)
    one_u2 = E.const(1) + E.pow_int(u, 2)

    def close(x, y):
        return abs(x - y) <= 1e-12 * max(1.0, abs(y))

    chain = None
    if close(e, 0.5):
        e_note = "e = 1/2: powers of arsinh(u)"
        chain = []
        for j in range(1, r + 1):
            # L s^n = mu n (n-1) s^(n-2) since L0 s = 0 and (1+u^2) s'^2 = 1
            a = c1 * _falling(2 * r - 1, 2 * (r - j)) * mu_ ** (r - j)
            b = c2 * _falling(2 * r - 2, 2 * (r - j)) * mu_ ** (r - j)
            chain.append(_combo(a, s, 2 * j - 1, b, 2 * j - 2))
    elif close(e, 1.5) and r <= 2:
        e_note = "e = 3/2"
        F1 = u * E.pow_complex(one_u2, -0.5)
        if r == 1:
            chain = [E.const(c1) * F1 + E.const(c2)]
        else:
            # L0(s - F1) = 2 F1 and L0(u s / sqrt(1+u^2)) = 2
            Fa = s - F1
            Fb = u * s * E.pow_complex(one_u2, -0.5)
            chain = [E.const(2 * mu_ * c1) * F1 + E.const(2 * mu_ * c2), E.const(c1) * Fa + E.const(c2) * Fb]
    elif close(e, 2.5) and r <= 2:
        e_note = "e = 5/2"
        F1 = (E.const(2) * E.pow_int(u, 3) + E.const(3) * u) * E.pow_complex(one_u2, -1.5)
        if r == 1:
            chain = [E.const(c1) * F1 + E.const(c2)]
        else:
            # L0(s + u^3/(3(1+u^2)^(3/2))) = 2 F1 and L0(F1 s - 1/(1+u^2)) = 8
            Fa = s + E.const(1 / 3) * E.pow_int(u, 3) * E.pow_complex(one_u2, -1.5)
            Fb = F1 * s - E.pow_int(one_u2, -1)
            chain = [E.const(2 * mu_ * c1) * F1 + E.const(8 * mu_ * c2), E.const(c1) * Fa + E.const(c2) * Fb]
    if chain is None:
        if numeric:
            return fr_numeric(Phi, Psi, r, z0, c)
        raise CapabilityError(
            f"no closed form for lam/(2 mu) = {e:.6g} at r = {r}; pass numeric=True for quadrature"
        )
    return HolomorphicLadder(
        r, tuple(chain), Phi, Psi, Provenance.LINEAR_QUADRATIC, note=f"{e_note}, u = {k:.6g} z"
    )


def _falling(n: int, k: int) -> float:
    out = 1
    for i in range(k):
        out *= n - i
    return float(out)


def _combo(a, base, p, b, q) -> FieldExpr:
    terms = []
    for coef, n in ((a, p), (b, q)):
        if coef == 0:
            continue
        term = E.const(1) if n == 0 else (base if n == 1 else E.pow_int(base, n))
        terms.append(E.const(coef) * term if n else E.const(coef))
    return E.add(*terms) if terms else E.const(0)


# ------------------------------------------------------------- numeric ladder

_NODES = 24
_MAX_PANELS = 128
_PSI_FLOOR = 1e-8


class NumericLadderFunction:
    """Level ``k`` of the quadrature ladder, evaluated along the segment ``[z0, z]``.

    On the segment every nested integral is a cumulative integral in the
    segment parameter, so all levels come from one piecewise Chebyshev pass;
    the pass is refined by doubling panels until the endpoint values settle.
    Taylor coefficients at ``z`` follow from the endpoint values by series
    integration of the ladder ODE.
    """

    _cache: dict = {}
    _lock = threading.Lock()

    def __init__(self, Phi, Psi, z0, c, level: int, tol: float = 1e-11):
        self.Phi = tuple(complex(v) for v in Phi)
        self.Psi = _trim(Psi)
        if not self.Psi:
            raise ArgumentError("numeric ladder needs Psi not identically zero")
        self.z0 = complex(z0)
        self.c = _coeff_pair(c)
        self.level = int(level)
        self.tol = tol
        if self.level < 1:
            raise ArgumentError("ladder level must be >= 1")
        if abs(poly_eval(self.Psi, self.z0)) < _PSI_FLOOR:
            raise DomainError(f"base point z0 = {self.z0} is a zero of Psi")

    def _key(self):
        return (self.Phi, self.Psi, self.z0, self.c, self.tol)

    def __eq__(self, other):
        return isinstance(other, NumericLadderFunction) and (self._key(), self.level) == (
            other._key(),
            other.level,
        )

    def __hash__(self):
        return hash((self._key(), self.level))

    def to_dict(self) -> dict:
        cp = lambda z: [z.real, z.imag]
        return {
            "kind": "numeric_ladder",
            "Phi": [cp(v) for v in self.Phi],
            "Psi": [cp(v) for v in self.Psi],
            "z0": cp(self.z0),
            "c": [cp(v) for v in self.c],
            "level": self.level,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NumericLadderFunction":
        try:
            cz = lambda p: complex(p[0], p[1])
            return cls(
                [cz(v) for v in d["Phi"]],
                [cz(v) for v in d["Psi"]],
                cz(d["z0"]),
                [cz(v) for v in d["c"]],
                int(d["level"]),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ValidationError(f"malformed numeric ladder function: {exc}") from None

    # segment geometry
    def domain_margin(self, z) -> float:
        s = np.linspace(0.0, 1.0, 65)
        path = self.z0 + s * (complex(z) - self.z0)
        return float(np.min(np.abs(np.polyval(list(reversed(self.Psi)), path))))

    def _endpoint(self, z: complex, levels: int):
        key = (self._key(), complex(z), levels)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = self._integrate(complex(z), levels)
        with self._lock:
            if len(self._cache) > 20000:
                self._cache.clear()
            self._cache[key] = out
        return out

    def _integrate(self, z: complex, levels: int):
        prev = None
        panels = 1
        while panels <= _MAX_PANELS:
            cur = self._pass(z, levels, panels)
            if prev is not None:
                scale = max(1.0, max(abs(v) for v in cur["f"]))
                diff = max(abs(a - b) for a, b in zip(cur["f"] + cur["G"], prev["f"] + prev["G"]))
                if diff <= self.tol * scale:
                    return cur
            prev = cur
            panels *= 2
        raise NumericalError(f"numeric ladder did not converge on the segment [{self.z0}, {z}]")

    def _pass(self, z: complex, levels: int, panels: int) -> dict:
        dz = z - self.z0
        x = np.cos(np.pi * (np.arange(_NODES) + 0.5) / _NODES)[::-1]  # Chebyshev points on [-1, 1]
        Phi_p = list(reversed(self.Phi)) or [0]
        Psi_p = list(reversed(self.Psi))
        c1, c2 = self.c
        # running values at the start of each panel
        A0 = 0j
        F0 = [0j] * (levels + 1)  # F0[k] = f_k at panel start, k = 1..levels
        G0 = [0j] * (levels + 1)
        F0[1] = c2
        width = 1.0 / panels

        def cumint(vals, a):
            # antiderivative in the panel parameter, zero at the panel start, evaluated at nodes and end
            coef = C.chebfit(x, vals, _NODES - 1)
            ic = C.chebint(coef, lbnd=-1) * (a / 2)
            return C.chebval(x, ic), C.chebval(1.0, ic)

        Lam_end = 1.0
        for p in range(panels):
            s = (p + 0.5 * (x + 1)) * width
            zeta = self.z0 + s * dz
            psi = np.polyval(Psi_p, zeta)
            bad = np.abs(psi) < _PSI_FLOOR
            if bad.any():
                raise DomainError(f"segment from {self.z0} to {z} meets a zero of Psi near {zeta[bad][0]:.6g}")
            q = dz * np.polyval(Phi_p, zeta) / psi
            Ai, Ae = cumint(q, width)
            A = A0 + Ai
            Lam = np.exp(-A)
            Fk_nodes = [None] * (levels + 1)
            Fi, Fe = cumint(dz * c1 * Lam, width)
            Fk_nodes[1] = F0[1] + Fi
            newF = list(F0)
            newG = list(G0)
            newF[1] = F0[1] + Fe
            for k in range(2, levels + 1):
                Gi, Ge = cumint(dz * Fk_nodes[k - 1] / (Lam * psi), width)
                Gk = G0[k] + Gi
                Fi, Fe = cumint(dz * Lam * Gk, width)
                Fk_nodes[k] = F0[k] + Fi
                newG[k] = G0[k] + Ge
                newF[k] = F0[k] + Fe
            A0 = A0 + Ae
            F0, G0 = newF, newG
            Lam_end = cmath.exp(-A0)
        return {"f": F0[1:], "G": G0[1:], "Lam": Lam_end}

    def value(self, z) -> complex:
        return self._endpoint(complex(z), self.level)["f"][self.level - 1]

    def taylor(self, z, K: int) -> np.ndarray:
        """Taylor coefficients of ``f_level`` at ``z`` from the ODE, order ``K``."""
        z = complex(z)
        st = self._endpoint(z, self.level)
        K1 = max(K, 1)
        zj = jet_var(0, z, 1, K1)
        psi = poly_eval(self.Psi, zj)
        q = poly_eval(self.Phi, zj) / psi
        # Lam = Lam(z) exp(-int q), int from z
        Lam = st["Lam"] * jet_analytic("exp", -antiderivative(q, 0))
        c1 = self.c[0]
        f = antiderivative(c1 * Lam, st["f"][0])
        for k in range(2, self.level + 1):
            G = antiderivative(f / (Lam * psi), st["G"][k - 1])
            f = antiderivative(Lam * G, st["f"][k - 1])
        return np.array(f.coeffs[: K + 1])


E.register_holo_loader("numeric_ladder", NumericLadderFunction.from_dict)


def fr_numeric(Phi, Psi, r: int, z0: complex, c=(1.0, 0.0), tol: float = 1e-11) -> HolomorphicLadder:
    """Quadrature ladder for arbitrary polynomial ``Phi``, ``Psi`` (``r <= 4``)."""
    if not 1 <= r <= 4:
        raise ArgumentError("numeric ladders support 1 <= r <= 4")
    chain = tuple(E.holo(NumericLadderFunction(Phi, Psi, z0, c, k, tol), Z) for k in range(1, r + 1))
    return HolomorphicLadder(
        r,
        chain,
        tuple(complex(v) for v in Phi),
        tuple(complex(v) for v in Psi),
        Provenance.NUMERIC,
        z0=complex(z0),
        note="straight segments from z0, piecewise Chebyshev quadrature",
    )


# ----------------------------------------------------------- t-only and x-only


def t_power_factor(spec: GroupSpec, k: int, r: int, c=(1.0, 0.0)) -> FieldExpr:
    """Proper r-harmonic function of ``t_k`` alone (``k`` is 1-based)."""
    if not 1 <= k <= spec.m:
        raise ArgumentError(f"t-index {k} outside 1..{spec.m}")
    if r < 1:
        raise ArgumentError("r must be >= 1")
    c1, c2 = _coeff_pair(c)
    t = E.coord(f"t{k}")
    w = spec.omega[k - 1]
    if abs(w) > 1e-12:
        tp = E.const(1) if r == 1 else (t if r == 2 else E.pow_int(t, r - 1))
        terms = []
        if c1 != 0:
            terms.append(E.const(c1) * _mul_opt(tp, E.exp(E.const(w) * t)))
        if c2 != 0:
            terms.append(E.const(c2) * tp if r > 1 else E.const(c2))
        return E.add(*terms)
    return _combo(c1, t, 2 * r - 1, c2, 2 * r - 2)


def _mul_opt(a: FieldExpr, b: FieldExpr) -> FieldExpr:
    if a.op == "const" and a.param == 1:
        return b
    return a * b


def quadratic_harmonic(
    spec: GroupSpec,
    a: complex = 0.0,
    b: complex = 0.0,
    v: Sequence[complex] | None = None,
    B=None,
    samples: int = 40,
) -> FieldExpr:
    """``a + b xi + <v, x> + x^T B x`` after checking ``trace(mu mu^T B) = 0``."""
    N = spec.x_size
    v = np.zeros(N, dtype=complex) if v is None else np.asarray(v, dtype=complex)
    B = np.zeros((N, N), dtype=complex) if B is None else np.asarray(B, dtype=complex)
    if v.shape != (N,) or B.shape != (N, N):
        raise ArgumentError(f"v needs length {N} and B shape ({N}, {N})")
    if not np.allclose(B, B.T, rtol=0, atol=1e-14 * max(1.0, np.abs(B).max())):
        raise ArgumentError("B must be symmetric")
    if b != 0 and not spec.heisenberg:
        raise ArgumentError("the xi coefficient b only exists on Heisenberg targets")
    if np.any(B):
        ts = qmc.Halton(d=spec.m, scramble=True, seed=12345).random(samples) * 4 - 2
        nB = np.linalg.norm(B)
        worst, where = 0.0, None
        for t in ts:
            U = mu(spec, t)
            S = U @ U.T
            tr = abs(np.trace(S @ B))
            rel = tr / (np.linalg.norm(S) * nB)
            if rel > worst:
                worst, where = rel, t
        if worst > 1e-9:
            raise ValidationError(
                f"trace(mu mu^T B) does not vanish: relative size {worst:.3e} at t = {np.round(where, 6).tolist()}"
            )
    terms = []
    if a != 0:
        terms.append(E.const(a))
    if b != 0:
        terms.append(E.const(b) * E.coord("xi"))
    xs = [E.coord(f"x{i + 1}") for i in range(N)]
    for i in range(N):
        if v[i] != 0:
            terms.append(E.const(v[i]) * xs[i])
    for i in range(N):
        if B[i, i] != 0:
            terms.append(E.const(B[i, i]) * E.pow_int(xs[i], 2))
        for j in range(i + 1, N):
            if B[i, j] != 0:
                terms.append(E.const(2 * B[i, j]) * xs[i] * xs[j])
    return E.add(*terms) if terms else E.const(0)


def separated_product(
    spec: GroupSpec,
    phi_t: FieldExpr,
    p: int,
    psi: FieldExpr,
    q: int,
    point: Point | None = None,
    seed: int = 0,
) -> tuple[FieldExpr, int]:
    """``phi_t * psi`` with claimed order ``p + q - 1``.

    ``phi_t`` may use t-coordinates only.  The t-independence of ``tau^a(psi)``,
    ``a <= q``, is checked at two t values sharing the remaining coordinates.
    """
    from .operators import tau_iter

    tnames = {f"t{k + 1}" for k in range(spec.m)}
    extra = E.coordinates(phi_t) - tnames
    if extra:
        raise ValidationError(f"phi_t must depend on t only, found {sorted(extra)}")
    if p < 1 or q < 1:
        raise ArgumentError("p and q must be >= 1")
    rng = np.random.default_rng(seed)
    if point is None:
        coords = list(rng.uniform(0.3, 1.5, size=spec.dim))
        point = Point.from_coords(spec, coords)
    other = list(point.coords)
    for s in spec.t_slots:
        other[s] = float(rng.uniform(-1, 1))
    p2 = Point.from_coords(spec, other)
    v1 = tau_iter(spec, psi, point, q).values
    v2 = tau_iter(spec, psi, p2, q).values
    scale = max(max(abs(x) for x in v1 + v2), 1e-300)
    for a_, (x, y) in enumerate(zip(v1, v2)):
        if abs(x - y) > 1e-8 * scale:
            raise ValidationError(
                f"tau^{a_}(psi) depends on t: {x:.6g} vs {y:.6g} at two t values"
            )
    if phi_t.op == "const" and phi_t.param == 1:
        return psi, q
    return phi_t * psi, p + q - 1
