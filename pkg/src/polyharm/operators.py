"""Tension field and conformality operator on the two semidirect-product families.

On ``R^m x_A R^n``::

    tau(phi) = sum_k (phi_{t_k t_k} - omega_k phi_{t_k}) + sum_ij (mu mu^T)_ij phi_{x_i x_j}

and on ``R^m x_A H^{2n+1}`` additionally the ``xi xi`` term with coefficient
``a(t)^2 + |mu^T J x|^2 / 4`` and the mixed ``xi x_i`` terms with coefficients
``(mu mu^T J x)_i``.  Everything is evaluated on jets, so ``tau`` maps a jet
of order ``K`` to a jet of order ``K - 2`` and can be iterated exactly.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ArgumentError
from .expr import FieldExpr, coordinates, eval_jets, evaluate
from .groups import GroupSpec, Point, a_scalar, heisenberg_J, mu
from .jets import Jet, derivative, jet_analytic, jet_const, jet_var, truncate
from .linalg import mat_exp_jet

__all__ = [
    "TauEvaluation",
    "CoefficientJets",
    "check_field",
    "eval_jet",
    "coefficient_jets",
    "tau_jet",
    "tau_iter",
    "kappa",
    "kappa_jet",
    "tau_fd",
    "tau_fd_with_scale",
    "FDResult",
    "product_rule_residual",
    "chain_rule_residual",
]


def check_field(field: FieldExpr, spec: GroupSpec) -> None:
    unknown = coordinates(field) - set(spec.coord_names)
    if unknown:
        raise ArgumentError(
            f"expression uses coordinates {sorted(unknown)} not present on {spec.label()} "
            f"(available: {spec.coord_names})"
        )


def _env_jets(spec: GroupSpec, point: Point, order: int) -> dict:
    return {
        name: jet_var(i, v, spec.dim, order)
        for i, (name, v) in enumerate(zip(spec.coord_names, point.coords))
    }


def eval_jet(field: FieldExpr, spec: GroupSpec, point: Point, order: int) -> Jet:
    """Order-``order`` jet of the field at ``point`` in all group coordinates."""
    point.check(spec)
    check_field(field, spec)
    if order == 0:
        return jet_const(evaluate(field, dict(zip(spec.coord_names, point.coords))), spec.dim, 0)
    return eval_jets(field, _env_jets(spec, point, order))


@dataclass(frozen=True)
class CoefficientJets:
    """Jets of the operator coefficients at one point (they depend on t and x only)."""

    order: int
    S: tuple  # (mu mu^T)_ij, i <= j stored in a full symmetric nested tuple
    b: tuple | None  # (mu mu^T J x)_i
    cxi: Jet | None  # a(t)^2 + |mu^T J x|^2 / 4

    def truncated(self, order: int) -> "CoefficientJets":
        if order == self.order:
            return self
        tr = lambda j: truncate(j, order)
        return CoefficientJets(
            order,
            tuple(tuple(tr(e) for e in row) for row in self.S),
            None if self.b is None else tuple(tr(e) for e in self.b),
            None if self.cxi is None else tr(self.cxi),
        )


@functools.lru_cache(maxsize=2048)
def _coefficient_jets(spec: GroupSpec, coords: tuple, order: int) -> CoefficientJets:
    K = max(order, 1)
    d = spec.dim
    t = [jet_var(s, coords[s], d, K) for s in spec.t_slots]
    N = spec.x_size
    zero = jet_const(0.0, d, K)
    M = [[sum((A[i, j] * tk for A, tk in zip(spec.family, t)), zero) for j in range(N)] for i in range(N)]
    U = mat_exp_jet(M)
    S = [[None] * N for _ in range(N)]
    for i in range(N):
        for j in range(i, N):
            S[i][j] = S[j][i] = sum((U[i][l] * U[j][l] for l in range(N)), zero)
    b = cxi = None
    if spec.heisenberg:
        x = [jet_var(s, coords[s], d, K) for s in spec.x_slots]
        J = heisenberg_J(spec.n)
        Jx = [sum((J[i, l] * x[l] for l in range(N) if J[i, l]), zero) for i in range(N)]
        b = tuple(sum((S[i][l] * Jx[l] for l in range(N)), zero) for i in range(N))
        q = [sum((U[l][i] * Jx[l] for l in range(N)), zero) for i in range(N)]
        lin = sum((2.0 / spec.n * trk * tk for trk, tk in zip(spec.traces, t)), zero)
        cxi = jet_analytic("exp", lin) + 0.25 * sum((qi * qi for qi in q), zero)
    cj = CoefficientJets(K, tuple(tuple(r) for r in S), b, cxi)
    return cj.truncated(order)


def coefficient_jets(spec: GroupSpec, point: Point, order: int) -> CoefficientJets:
    """Cached per (spec, point, order); the cache is lock-protected by ``lru_cache``."""
    return _coefficient_jets(spec, tuple(float(c) for c in point.coords), order)


def tau_jet(spec: GroupSpec, phi: Jet, coeffs: CoefficientJets) -> Jet:
    """Jet (order K-2) of the tension field of the field whose order-K jet is ``phi``."""
    K = phi.order
    if K < 2:
        raise ArgumentError(f"tau needs a jet of order >= 2, got {K}")
    c = coeffs.truncated(K - 2) if coeffs.order != K - 2 else coeffs
    d1 = {}

    def first(s):
        if s not in d1:
            d1[s] = derivative(phi, s)
        return d1[s]

    acc = np.zeros_like(truncate(phi, K - 2).coeffs)
    for k, s in enumerate(spec.t_slots):
        dt = first(s)
        acc = acc + derivative(dt, s).coeffs - spec.omega[k] * truncate(dt, K - 2).coeffs
    xs = spec.x_slots
    for i, si in enumerate(xs):
        di = first(si)
        acc = acc + (c.S[i][i] * derivative(di, si)).coeffs
        for j in range(i + 1, len(xs)):
            acc = acc + 2.0 * (c.S[i][j] * derivative(di, xs[j])).coeffs
    if spec.heisenberg:
        dxi = first(spec.xi_slot)
        acc = acc + (c.cxi * derivative(dxi, spec.xi_slot)).coeffs
        for i, si in enumerate(xs):
            acc = acc + (c.b[i] * derivative(dxi, si)).coeffs
    return Jet(phi.dim, K - 2, acc)


@dataclass(frozen=True)
class TauEvaluation:
    """``values[a]`` is ``tau^a(field)`` at the point, ``a = 0..r``."""

    values: tuple
    jet_order_used: int


def tau_iter(spec: GroupSpec, field: FieldExpr, point: Point, r: int) -> TauEvaluation:
    """Iterated tension field from one order-2r jet evaluation."""
    if r < 1:
        raise ArgumentError("r must be >= 1")
    K = 2 * r
    jet = eval_jet(field, spec, point, K)
    coeffs = coefficient_jets(spec, point, K - 2)
    values = [jet.value]
    for _ in range(r):
        jet = tau_jet(spec, jet, coeffs)
        values.append(jet.value)
    return TauEvaluation(tuple(values), K)


def tau_values_jet(spec: GroupSpec, phi: Jet, point: Point, levels: int) -> list[Jet]:
    """``[phi, tau(phi), ..., tau^levels(phi)]`` as jets (orders K, K-2, ...)."""
    coeffs = coefficient_jets(spec, point, phi.order - 2)
    out = [phi]
    for _ in range(levels):
        out.append(tau_jet(spec, out[-1], coeffs))
    return out


def _kappa_terms(spec: GroupSpec, df: Sequence, dg: Sequence, c) -> object:
    # symmetric assembly: swapping f and g reproduces every intermediate exactly
    pair = lambda a, b: df[a] * dg[b] + df[b] * dg[a]
    total = 0.5 * sum((pair(s, s) for s in spec.t_slots), 0.0 * df[0])
    xs = spec.x_slots
    for i, si in enumerate(xs):
        total = total + 0.5 * c.S[i][i] * pair(si, si)
        for j in range(i + 1, len(xs)):
            total = total + c.S[i][j] * pair(si, xs[j])
    if spec.heisenberg:
        s0 = spec.xi_slot
        total = total + 0.5 * c.cxi * pair(s0, s0)
        for i, si in enumerate(xs):
            total = total + 0.5 * c.b[i] * pair(s0, si)
    return total


def kappa_jet(spec: GroupSpec, f: Jet, g: Jet, point: Point) -> Jet:
    """Jet (order K-1) of the conformality operator of two order-K jets."""
    if f.order < 1:
        raise ArgumentError("kappa needs jets of order >= 1")
    c = coefficient_jets(spec, point, f.order - 1)
    df = [derivative(f, s) for s in range(spec.dim)]
    dg = [derivative(g, s) for s in range(spec.dim)]
    return _kappa_terms(spec, df, dg, c)


def kappa(spec: GroupSpec, f: FieldExpr, g: FieldExpr, point: Point) -> complex:
    """Conformality operator ``kappa(f, g)`` at a point."""
    jf = eval_jet(f, spec, point, 1)
    jg = eval_jet(g, spec, point, 1)
    return kappa_jet(spec, jf, jg, point).value


# ------------------------------------------------------- finite-difference oracle


def _plain_coefficients(spec: GroupSpec, point: Point):
    U = mu(spec, point.t)
    S = U @ U.T
    if not spec.heisenberg:
        return S, None, None
    Jx = heisenberg_J(spec.n) @ np.array(point.x)
    q = U.T @ Jx
    return S, S @ Jx, a_scalar(spec, point.t) ** 2 + 0.25 * float(q @ q)


class FDResult(NamedTuple):
    value: complex
    scale: float  # largest single term magnitude
    noise: float  # rounding floor of the stencils


def tau_fd_with_scale(
    spec: GroupSpec,
    field: FieldExpr | Callable,
    point: Point,
    h: float = 1e-3,
    extrapolate: bool = True,
) -> FDResult:
    """Finite-difference tension field with its term scale and rounding floor.

    ``field`` is an expression or a callable on coordinate tuples.  Second
    derivatives use the 3-point stencil, mixed ones the 4-point cross stencil;
    with ``extrapolate`` the steps ``h`` and ``2h`` are Richardson-combined,
    which removes the ``h^2`` truncation term.
    """
    point.check(spec)
    if isinstance(field, FieldExpr):
        check_field(field, spec)
        names = spec.coord_names
        f = lambda p: evaluate(field, dict(zip(names, p)))
    else:
        f = field
    a = _tau_fd_once(spec, f, point, h)
    if not extrapolate:
        return a
    b = _tau_fd_once(spec, f, point, 2 * h)
    return FDResult((4 * a.value - b.value) / 3, a.scale, (4 * a.noise + b.noise) / 3)


def _tau_fd_once(spec: GroupSpec, f: Callable, point: Point, h: float) -> FDResult:
    p0 = np.array(point.coords, dtype=float)
    cache: dict = {}

    def F(*steps):
        key = tuple(sorted(steps))
        if key not in cache:
            p = p0.copy()
            for s, sign in steps:
                p[s] += sign * h
            cache[key] = f(tuple(p))
        return cache[key]

    d1 = lambda s: (F((s, 1)) - F((s, -1))) / (2 * h)
    d2 = lambda s: (F((s, 1)) - 2 * F() + F((s, -1))) / (h * h)

    def dmix(a, b):
        return (F((a, 1), (b, 1)) - F((a, 1), (b, -1)) - F((a, -1), (b, 1)) + F((a, -1), (b, -1))) / (
            4 * h * h
        )

    S, bvec, cxi = _plain_coefficients(spec, point)
    terms, second, first = [], 0.0, 0.0
    for k, s in enumerate(spec.t_slots):
        terms += [d2(s), -spec.omega[k] * d1(s)]
        second += 1.0
        first += abs(spec.omega[k])
    xs = spec.x_slots
    for i, si in enumerate(xs):
        terms.append(S[i, i] * d2(si))
        second += abs(S[i, i])
        for j in range(i + 1, len(xs)):
            terms.append(2 * S[i, j] * dmix(si, xs[j]))
            second += abs(S[i, j])
    if spec.heisenberg:
        s0 = spec.xi_slot
        terms.append(cxi * d2(s0))
        second += abs(cxi)
        for i, si in enumerate(xs):
            terms.append(bvec[i] * dmix(s0, si))
            second += abs(bvec[i])
    fmax = max(abs(v) for v in cache.values())
    eps = np.finfo(float).eps
    noise = 16 * eps * fmax * (second / h**2 + first / h)
    return FDResult(complex(sum(terms)), max(abs(t) for t in terms), noise)


def tau_fd(spec: GroupSpec, field, point: Point, h: float = 1e-4) -> complex:
    """Plain central differences with step ``h`` (no extrapolation)."""
    return tau_fd_with_scale(spec, field, point, h, extrapolate=False).value


# ------------------------------------------------------------ identity checks


class Residual(NamedTuple):
    residual: complex
    scale: float


def product_rule_residual(spec: GroupSpec, f: FieldExpr, g: FieldExpr, point: Point) -> Residual:
    """``tau(fg) - tau(f) g - 2 kappa(f, g) - f tau(g)``, with the largest term magnitude."""
    jf = eval_jet(f, spec, point, 2)
    jg = eval_jet(g, spec, point, 2)
    c = coefficient_jets(spec, point, 0)
    lhs = tau_jet(spec, jf * jg, c).value
    tf, tg = tau_jet(spec, jf, c).value, tau_jet(spec, jg, c).value
    k = kappa_jet(spec, jf, jg, point).value
    terms = [lhs, tf * jg.value, 2 * k, jf.value * tg]
    return Residual(lhs - terms[1] - terms[2] - terms[3], max(abs(t) for t in terms))


def chain_rule_residual(spec: GroupSpec, f_z: FieldExpr, phi: FieldExpr, point: Point) -> Residual:
    """``tau(f o phi) - kappa(phi, phi) f''(phi) - tau(phi) f'(phi)`` for ``f`` in ``z``."""
    from .expr import substitute

    jphi = eval_jet(phi, spec, point, 2)
    c = coefficient_jets(spec, point, 0)
    comp = eval_jet(substitute(f_z, {"z": phi}), spec, point, 2)
    lhs = tau_jet(spec, comp, c).value
    fz = eval_jets(f_z, {"z": jet_var(0, jphi.value, 1, 2)})
    f1, f2 = fz.coeffs[1], 2 * fz.coeffs[2]
    k = kappa_jet(spec, jphi, jphi, point).value
    t = tau_jet(spec, jphi, c).value
    terms = [lhs, k * f2, t * f1]
    return Residual(lhs - terms[1] - terms[2], max(abs(v) for v in terms))
