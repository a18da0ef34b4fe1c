"""Registry of the named four-dimensional groups and their worked example functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import expr as E
from .constructors import (
    IsoparametricPair,
    eigenfunction_isotropic,
    fr_eigenfunction,
    fr_linear_quadratic,
    isoparametric_from_eigenvector,
    quadratic_harmonic,
    re_im_parts,
    separated_product,
    t_power_factor,
)
from .errors import ArgumentError, CatalogLookupError, ValidationError
from .expr import FieldExpr
from .groups import GroupSpec, build_spec

__all__ = [
    "Param",
    "Builtin",
    "BuiltinResult",
    "CatalogEntry",
    "CatalogInstance",
    "names",
    "lookup",
    "builtin",
    "builtin_result",
    "entry_dict",
]

FLAG_G49 = "phi-coefficient-5a2"
FLAG_G44_SIGN = "g44-exponent-sign"
FLAG_G44_CUBIC = "g44-quadratic-term"


@dataclass(frozen=True)
class Param:
    name: str
    default: float
    check: Callable[[float], bool]
    constraint: str


@dataclass(frozen=True)
class BuiltinResult:
    expr: FieldExpr
    claim: str  # r_harmonic | isoparametric | eigenfunction
    r: int | None = None
    pair: IsoparametricPair | None = None
    flags: tuple = ()
    notes: tuple = ()


@dataclass(frozen=True)
class Builtin:
    id: str
    claim: str
    summary: str
    build: Callable[..., BuiltinResult]
    options: tuple = ()


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kind: str
    m: int
    n: int
    family: Callable[[Mapping], list]
    mu: Callable[[Mapping, np.ndarray], np.ndarray]
    params: tuple = ()
    builtins: tuple = ()
    reference: str = ""
    algebra: str = ""
    notes: tuple = ()

    def builtin(self, fid: str) -> Builtin:
        for b in self.builtins:
            if b.id == fid:
                return b
        raise CatalogLookupError(
            f"{self.name} has no builtin {fid!r}; available: {[b.id for b in self.builtins]}"
        )


@dataclass(frozen=True)
class CatalogInstance:
    entry: CatalogEntry
    params: dict
    spec: GroupSpec


# ------------------------------------------------------------------ helpers


def _coef(coeffs, n, default):
    if coeffs is None:
        return tuple(complex(v) for v in default)
    coeffs = tuple(complex(v) for v in coeffs)
    if len(coeffs) != n:
        raise ArgumentError(f"expected {n} coefficients, got {len(coeffs)}")
    if not any(coeffs):
        raise ArgumentError("coefficients must not all vanish")
    return coeffs


def _need_r(r, default=1) -> int:
    r = default if r is None else int(r)
    if r < 1:
        raise ArgumentError("r must be >= 1")
    return r


def _rot(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, s], [-s, c]])


def _x(i):
    return E.coord(f"x{i}")


def _t(k=1):
    return E.coord(f"t{k}")


def _powsum(c1, c2, base, p1, p2):
    terms = []
    for c, p in ((c1, p1), (c2, p2)):
        if c == 0:
            continue
        if p == 0:
            terms.append(E.const(c))
        else:
            terms.append(E.const(c) * (base if p == 1 else E.pow_int(base, p)))
    return E.add(*terms)


# --------------------------------------------------------------- Sol^3


def _sol3_arsinh(spec, params, r=None, coeffs=None, i=1, **_):
    r = _need_r(r)
    c1, c2 = _coef(coeffs, 2, (1, 0))
    if i not in (1, 2):
        raise ArgumentError("i selects the eigenvector and must be 1 or 2")
    arg = E.exp(-_t()) * _x(1) if i == 1 else E.exp(_t()) * _x(2)
    s = E.arsinh(arg)
    return BuiltinResult(_powsum(c1, c2, s, 2 * r - 1, 2 * r - 2), "r_harmonic", r)


def _sol3_phi(spec, params, i=1, **_):
    v = [1, 0] if i == 1 else [0, 1]
    pair = isoparametric_from_eigenvector(spec, v)
    return BuiltinResult(pair.phi, "isoparametric", pair=pair)


# --------------------------------------------------------------- G4.1


def _g41_poly(spec, params, r=None, coeffs=None, **_):
    r = _need_r(r)
    a1, a2 = _coef(coeffs, 2, (1, 0))
    return BuiltinResult(_powsum(a1, a2, _x(3), 2 * r - 1, 2 * r - 2), "r_harmonic", r)


def _g41_product(spec, params, r=None, coeffs=None, p=2, q=2, **_):
    c1, c2, a1, a2 = _coef(coeffs, 4, (1, 0, 1, 0))
    p, q = int(p), int(q)
    phi_t = _powsum(c1, c2, _t(), 2 * p - 1, 2 * p - 2)
    psi = _powsum(a1, a2, _x(3), 2 * q - 1, 2 * q - 2)
    expr, order = separated_product(spec, phi_t, p, psi, q)
    if r is not None and int(r) != order:
        raise ArgumentError(f"g41-product with p={p}, q={q} has order {order}, not r={r}")
    return BuiltinResult(expr, "r_harmonic", order)


# --------------------------------------------------------------- G4.4

_G44_B = np.array([[0, 0, -1], [0, 1, 0], [-1, 0, -1]], dtype=float)  # x2^2 - x3^2 - 2 x1 x3


def _g44_psi(spec, a, B=_G44_B):
    return quadratic_harmonic(spec, a[0], 0, [a[1], a[2], 0], a[3] * B)


def _g44_tfactor(r, c1, c2, sign):
    tp = E.const(1) if r == 1 else E.pow_int(_t(), r - 1)
    terms = []
    if c1 != 0:
        e = E.exp(E.const(3.0 * sign) * _t())
        terms.append(E.const(c1) * (e if r == 1 else tp * e))
    if c2 != 0:
        terms.append(E.const(c2) * tp)
    return E.add(*terms)


def _g44_sep(spec, params, r=None, coeffs=None, **_):
    r = _need_r(r)
    c1, c2, *a = _coef(coeffs, 6, (1, 1, 1, 1, 1, 1))
    expr = _g44_tfactor(r, c1, c2, +1) * _g44_psi(spec, a)
    return BuiltinResult(
        expr,
        "r_harmonic",
        r,
        flags=(FLAG_G44_SIGN, FLAG_G44_CUBIC),
        notes=("t-factor uses exp(+3t) since omega = 3; quadratic uses x3^2",),
    )


def _g44_printed_sign(spec, params, r=None, coeffs=None, **_):
    r = _need_r(r)
    c1, c2, *a = _coef(coeffs, 6, (1, 1, 1, 1, 1, 1))
    expr = _g44_tfactor(r, c1, c2, -1) * _g44_psi(spec, a)
    return BuiltinResult(
        expr, "r_harmonic", r, flags=(FLAG_G44_SIGN,), notes=("printed exp(-3t) t-factor; expected to fail",)
    )


def _g44_printed_cubic(spec, params, r=None, coeffs=None, **_):
    r = _need_r(r)
    c1, c2, a1, a2, a3, a4 = _coef(coeffs, 6, (1, 1, 1, 1, 1, 1))
    x1, x2, x3 = _x(1), _x(2), _x(3)
    psi = E.add(
        E.const(a1), E.const(a2) * x1, E.const(a3) * x2,
        E.const(a4) * (E.pow_int(x2, 2) - E.pow_int(x3, 3) - E.const(2) * x1 * x3),
    )
    expr = _g44_tfactor(r, c1, c2, +1) * psi
    return BuiltinResult(
        expr, "r_harmonic", r, flags=(FLAG_G44_CUBIC,), notes=("printed x3^3 term; expected to fail",)
    )


# --------------------------------------------------------------- G4.8


def _g48_sep(spec, params, r=None, coeffs=None, **_):
    r = _need_r(r)
    c1, c2, *a = _coef(coeffs, 7, (1, 1, 1, 1, 1, 1, 1))
    B = np.array([[0, 0.5], [0.5, 0]]) * a[4]
    psi = quadratic_harmonic(spec, a[0], a[1], [a[2], a[3]], B)
    phi_t = t_power_factor(spec, 1, r, (c1, c2))
    expr, order = separated_product(spec, phi_t, r, psi, 1)
    return BuiltinResult(expr, "r_harmonic", order)


# --------------------------------------------------------------- G4.9


def _g49_phi(i, alpha):
    xi = _x(i)
    return xi if alpha == 0 else E.exp(E.const(-alpha) * _t()) * xi


def _g49_xpower(spec, params, r=None, coeffs=None, i=1, **_):
    if params["alpha"] != 0:
        raise ValidationError("g49-xpower needs alpha = 0 (Phi = 0, Psi = 1)")
    r = _need_r(r)
    c1, c2 = _coef(coeffs, 2, (1, 0))
    return BuiltinResult(_powsum(c1, c2, _x(int(i)), 2 * r - 1, 2 * r - 2), "r_harmonic", r)


def _g49_ladder(spec, params, r, coeffs, i):
    alpha = params["alpha"]
    if alpha <= 0:
        raise ValidationError("the G4.9 closed forms need alpha > 0; use g49-xpower for alpha = 0")
    lad = fr_linear_quadratic(5 * alpha**2, alpha**2, 1.0, r, _coef(coeffs, 2, (1, 0)))
    return lad.compose(_g49_phi(int(i), alpha))


_G49_NOTE = (
    "isoparametric data Phi(z) = 5 alpha^2 z (printed value 3 alpha^2 is inconsistent "
    "with omega = 4 alpha and with the displayed harmonic function)",
)


def _g49_harmonic(spec, params, r=None, coeffs=None, i=1, **_):
    if r not in (None, 1):
        raise ArgumentError("g49-harmonic is the r = 1 closed form")
    return BuiltinResult(_g49_ladder(spec, params, 1, coeffs, i), "r_harmonic", 1, flags=(FLAG_G49,), notes=_G49_NOTE)


def _g49_biharmonic(spec, params, r=None, coeffs=None, i=1, **_):
    if r not in (None, 2):
        raise ArgumentError("g49-biharmonic is the r = 2 closed form")
    return BuiltinResult(_g49_ladder(spec, params, 2, coeffs, i), "r_harmonic", 2, flags=(FLAG_G49,), notes=_G49_NOTE)


def _g49_phi_pair(spec, params, i=1, **_):
    p1, p2 = re_im_parts(spec, [1, 1j])
    pair = p1 if int(i) == 1 else p2
    flags = (FLAG_G49,) if params["alpha"] != 0 else ()
    return BuiltinResult(pair.phi, "isoparametric", pair=pair, flags=flags, notes=_G49_NOTE if flags else ())


# --------------------------------------------------------------- G4.10


def _g410_v(sign):
    if sign not in (1, -1, "+", "-"):
        raise ArgumentError("sign must be + or -")
    sign = 1 if sign in (1, "+") else -1
    return [1, sign * 1j]


def _nu(nu):
    nu = (1.0, 0.5) if nu is None else tuple(complex(v) for v in nu)
    if len(nu) != 2:
        raise ArgumentError("nu needs two entries")
    return nu


def _g410_eigen(spec, params, nu=None, sign=1, **_):
    pair = eigenfunction_isotropic(spec, _g410_v(sign), _nu(nu))
    return BuiltinResult(pair.phi, "eigenfunction", pair=pair)


def _g410_ladder(spec, params, r=None, coeffs=None, nu=None, sign=1, **_):
    r = _need_r(r)
    pair = eigenfunction_isotropic(spec, _g410_v(sign), _nu(nu))
    lam, mu_ = pair.Phi[1], pair.Psi[2]
    lad = fr_eigenfunction(lam, mu_, r, _coef(coeffs, 2, (1, 1)))
    return BuiltinResult(lad.compose(pair.phi), "r_harmonic", r, notes=(lad.note,))


# --------------------------------------------------------------- registry


def _A(rows):
    return np.array(rows, dtype=float)


def _ok(_):
    return True


_ENTRIES = [
    CatalogEntry(
        "Sol3", "abelian", 1, 2,
        lambda p: [np.diag([1.0, -1.0])],
        lambda p, t: np.diag([math.exp(t[0]), math.exp(-t[0])]),
        builtins=(
            Builtin("sol3-arsinh", "r_harmonic", "c1 arsinh(u)^(2r-1) + c2 arsinh(u)^(2r-2), u = e^-t x1 (i=1) or e^t x2 (i=2)", _sol3_arsinh, ("i",)),
            Builtin("sol3-phi", "isoparametric", "e^-t x1 (i=1) or e^t x2 (i=2): Phi = z, Psi = z^2 + 1", _sol3_phi, ("i",)),
        ),
        reference="Thurston geometry Sol^3, R x_A R^2 with A = diag(1, -1)",
    ),
    CatalogEntry(
        "G4.1", "abelian", 1, 3,
        lambda p: [_A([[0, 1, 0], [0, 0, 1], [0, 0, 0]])],
        lambda p, t: _A([[1, t[0], t[0] ** 2 / 2], [0, 1, t[0]], [0, 0, 1]]),
        builtins=(
            Builtin("g41-poly", "r_harmonic", "a1 x3^(2r-1) + a2 x3^(2r-2)", _g41_poly),
            Builtin("g41-product", "r_harmonic", "(c1 t^(2p-1) + c2 t^(2p-2))(a1 x3^(2q-1) + a2 x3^(2q-2)), order p+q-1", _g41_product, ("p", "q")),
        ),
        algebra="g4.1",
    ),
    CatalogEntry(
        "G4.2", "abelian", 1, 3,
        lambda p: [_A([[p["alpha"], 0, 0], [0, 1, 1], [0, 0, 1]])],
        lambda p, t: _A([[math.exp(p["alpha"] * t[0]), 0, 0], [0, math.exp(t[0]), t[0] * math.exp(t[0])], [0, 0, math.exp(t[0])]]),
        params=(Param("alpha", 1.0, lambda a: a != 0, "alpha != 0"),),
        algebra="g4.2^alpha",
    ),
    CatalogEntry(
        "G4.3", "abelian", 1, 3,
        lambda p: [_A([[1, 0, 0], [0, 0, 1], [0, 0, 0]])],
        lambda p, t: _A([[math.exp(t[0]), 0, 0], [0, 1, t[0]], [0, 0, 1]]),
        algebra="g4.3",
    ),
    CatalogEntry(
        "G4.4", "abelian", 1, 3,
        lambda p: [_A([[1, 1, 0], [0, 1, 1], [0, 0, 1]])],
        lambda p, t: math.exp(t[0]) * _A([[1, t[0], t[0] ** 2 / 2], [0, 1, t[0]], [0, 0, 1]]),
        builtins=(
            Builtin("g44-sep", "r_harmonic", "(c1 t^(r-1) e^(3t) + c2 t^(r-1))(a1 + a2 x1 + a3 x2 + a4 (x2^2 - x3^2 - 2 x1 x3))", _g44_sep),
            Builtin("g44-sep-printed", "r_harmonic", "as g44-sep but with the printed e^(-3t)", _g44_printed_sign),
            Builtin("g44-quadratic-printed", "r_harmonic", "as g44-sep but with the printed x3^3", _g44_printed_cubic),
        ),
        algebra="g4.4",
        notes=(
            "printed example uses e^(-3t); omega = 3 requires e^(+3t)",
            "printed quadratic x2^2 - x3^3 - 2 x1 x3 read as x2^2 - x3^2 - 2 x1 x3",
        ),
    ),
    CatalogEntry(
        "G4.5", "abelian", 1, 3,
        lambda p: [np.diag([p["alpha"], p["beta"], p["gamma"]])],
        lambda p, t: np.diag([math.exp(p[k] * t[0]) for k in ("alpha", "beta", "gamma")]),
        params=(
            Param("alpha", 1.0, lambda a: a != 0, "alpha beta gamma != 0"),
            Param("beta", 1.0, lambda a: a != 0, "alpha beta gamma != 0"),
            Param("gamma", 1.0, lambda a: a != 0, "alpha beta gamma != 0"),
        ),
        algebra="g4.5^(alpha beta gamma)",
    ),
    CatalogEntry(
        "G4.6", "abelian", 1, 3,
        lambda p: [_A([[p["alpha"], 0, 0], [0, p["beta"], 1], [0, -1, p["beta"]]])],
        lambda p, t: np.block([
            [np.array([[math.exp(p["alpha"] * t[0])]]), np.zeros((1, 2))],
            [np.zeros((2, 1)), math.exp(p["beta"] * t[0]) * _rot(t[0])],
        ]),
        params=(Param("alpha", 1.0, lambda a: a > 0, "alpha > 0"), Param("beta", 0.0, _ok, "beta real")),
        algebra="g4.6^(alpha beta)",
    ),
    CatalogEntry(
        "G4.7", "heisenberg", 1, 1,
        lambda p: [_A([[1, 1], [0, 1]])],
        lambda p, t: math.exp(t[0]) * _A([[1, t[0]], [0, 1]]),
        algebra="g4.7",
    ),
    CatalogEntry(
        "G4.8", "heisenberg", 1, 1,
        lambda p: [np.diag([1.0, p["alpha"]])],
        lambda p, t: np.diag([math.exp(t[0]), math.exp(p["alpha"] * t[0])]),
        params=(Param("alpha", 0.0, lambda a: -1 <= a <= 1, "alpha in [-1, 1]"),),
        builtins=(
            Builtin("g48-sep", "r_harmonic", "t-factor (omega = 2(1+alpha)) times a1 + a2 xi + a3 x1 + a4 x2 + a5 x1 x2", _g48_sep),
        ),
        algebra="g4.8^alpha",
    ),
    CatalogEntry(
        "G4.9", "heisenberg", 1, 1,
        lambda p: [_A([[p["alpha"], 1], [-1, p["alpha"]]])],
        lambda p, t: math.exp(p["alpha"] * t[0]) * _rot(t[0]),
        params=(Param("alpha", 1.0, lambda a: a >= 0, "alpha >= 0"),),
        builtins=(
            Builtin("g49-xpower", "r_harmonic", "c1 x_i^(2r-1) + c2 x_i^(2r-2) (alpha = 0)", _g49_xpower, ("i",)),
            Builtin("g49-harmonic", "r_harmonic", "c1 (2u^3 + 3u)/(u^2+1)^(3/2) + c2, u = alpha e^(-alpha t) x_i", _g49_harmonic, ("i",)),
            Builtin("g49-biharmonic", "r_harmonic", "biharmonic closed form in u = alpha e^(-alpha t) x_i", _g49_biharmonic, ("i",)),
            Builtin("g49-phi", "isoparametric", "e^(-alpha t) x_i: Phi = 5 alpha^2 z, Psi = alpha^2 z^2 + 1", _g49_phi_pair, ("i",)),
        ),
        algebra="g4.9^alpha",
        notes=("printed tau(phi_i) = 3 alpha^2 phi_i; the operator gives 5 alpha^2 phi_i",),
    ),
    CatalogEntry(
        "G4.10", "abelian", 2, 2,
        lambda p: [-np.eye(2), _A([[0, 1], [-1, 0]])],
        lambda p, t: math.exp(-t[0]) * _rot(t[1]),
        builtins=(
            Builtin("g410-eigen", "eigenfunction", "e^(-<nu, t>)(x1 +/- i x2)", _g410_eigen, ("nu", "sign")),
            Builtin("g410-ladder", "r_harmonic", "eigenfunction ladder f_r composed on e^(-<nu, t>)(x1 +/- i x2)", _g410_ladder, ("nu", "sign")),
        ),
        algebra="g4.10",
        notes=(
            "family taken from the representation table: -I and [[0, 1], [-1, 0]]; "
            "the worked example prints the transposed rotation generator",
        ),
    ),
]

_REGISTRY = {e.name: e for e in _ENTRIES}
_ALIASES = {"SOL3": "Sol3", "SOL^3": "Sol3"}


def names() -> list[str]:
    return [e.name for e in _ENTRIES]


def get_entry(name: str) -> CatalogEntry:
    key = _ALIASES.get(name.upper(), name)
    for k, e in _REGISTRY.items():
        if k.lower() == key.lower():
            return e
    raise CatalogLookupError(f"unknown group {name!r}; registered: {names()}")


def _resolve_params(entry: CatalogEntry, params: Mapping) -> dict:
    known = {p.name for p in entry.params}
    extra = {k for k, v in params.items() if v is not None} - known
    if extra:
        raise ArgumentError(f"{entry.name} takes parameters {sorted(known) or 'none'}, got {sorted(extra)}")
    out = {}
    for p in entry.params:
        v = params.get(p.name)
        v = p.default if v is None else float(v)
        if not p.check(v):
            raise ValidationError(f"{entry.name}: {p.name} = {v:g} violates the constraint {p.constraint}")
        out[p.name] = v
    return out


def lookup(name: str, **params) -> CatalogInstance:
    """Validated group for a registered name and parameters."""
    entry = get_entry(name)
    vals = _resolve_params(entry, params)
    label = entry.name + (
        "(" + ", ".join(f"{k}={v:g}" for k, v in vals.items()) + ")" if vals else ""
    )
    spec = build_spec(entry.kind, entry.m, entry.n, entry.family(vals), name=label)
    return CatalogInstance(entry, vals, spec)


def builtin_result(name: str, function_id: str, r=None, coefficients=None, params=None, **options) -> BuiltinResult:
    inst = lookup(name, **(params or {}))
    b = inst.entry.builtin(function_id)
    bad = set(options) - set(b.options)
    if bad:
        raise ArgumentError(f"{function_id} accepts options {list(b.options) or 'none'}, got {sorted(bad)}")
    if b.claim == "r_harmonic":
        return b.build(inst.spec, inst.params, r=r, coeffs=coefficients, **options)
    if coefficients is not None or r is not None:
        raise ArgumentError(f"{function_id} takes no r or coefficients")
    return b.build(inst.spec, inst.params, **options)


def builtin(name: str, function_id: str, r=None, coefficients=None, params=None, **options) -> FieldExpr:
    """Expression of a registered example function."""
    return builtin_result(name, function_id, r, coefficients, params, **options).expr


def entry_dict(inst: CatalogInstance | CatalogEntry) -> dict:
    from .groups import spec_to_dict

    if isinstance(inst, CatalogEntry):
        return {
            "name": inst.name,
            "kind": inst.kind,
            "m": inst.m,
            "n": inst.n,
            "parameters": [{"name": p.name, "default": p.default, "constraint": p.constraint} for p in inst.params],
            "builtins": [b.id for b in inst.builtins],
        }
    e = inst.entry
    d = entry_dict(e)
    d.update(
        {
            "label": inst.spec.label(),
            "values": dict(inst.params),
            "spec": spec_to_dict(inst.spec),
            "omega": list(inst.spec.omega),
            "builtins": [{"id": b.id, "claim": b.claim, "summary": b.summary, "options": list(b.options)} for b in e.builtins],
            "reference": e.reference or f"representation table row {e.name}",
            "algebra": e.algebra,
            "notes": list(e.notes) + ["faithful representations may carry an extra Exp(sum D_k t_k) block; it plays no role in the operators"],
        }
    )
    return d
