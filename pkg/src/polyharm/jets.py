"""Truncated multivariate Taylor jets over complex coefficients.

A :class:`Jet` of dimension ``d`` and order ``K`` stores every Taylor
coefficient ``c[alpha]`` with ``|alpha| <= K`` of a smooth function at a
point, densely, in graded-lexicographic order.  Because the order is graded,
the jet of order ``K' < K`` is a prefix of the coefficient array, which makes
truncation free.

Multiplication is the truncated Cauchy product; analytic primitives are
applied by univariate Taylor composition around the constant term.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import ArgumentError, DomainError

__all__ = [
    "Jet",
    "ANALYTIC_PRIMITIVES",
    "jet_var",
    "jet_const",
    "jet_add",
    "jet_mul",
    "jet_scale",
    "jet_neg",
    "jet_analytic",
    "extract_partial",
    "derivative",
    "truncate",
    "antiderivative",
    "taylor_coefficients",
    "compose",
    "branch_distance",
    "multi_indices",
    "num_coeffs",
]

BRANCH_TOL = 1e-12

ANALYTIC_PRIMITIVES = ("exp", "log", "sqrt", "sin", "cos", "arsinh", "pow_int", "pow_complex")


def num_coeffs(dim: int, order: int) -> int:
    """Number of multi-indices of length ``dim`` with total degree <= ``order``."""
    return math.comb(dim + order, dim)


def _compositions(total, parts):
    # lexicographically descending: (total, 0, ..., 0) first
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class _Table:
    dim: int
    order: int
    exponents: np.ndarray  # (N, d)
    rank: dict
    I: np.ndarray
    J: np.ndarray
    scatter: sparse.csr_matrix  # (N, npairs)
    factorials: np.ndarray  # alpha!
    deriv_src: tuple  # per slot: source ranks for the order-(K-1) prefix
    deriv_fac: tuple


@functools.lru_cache(maxsize=None)
def _table(dim: int, order: int) -> _Table:
    exps = [e for k in range(order + 1) for e in _compositions(k, dim)]
    rank = {e: i for i, e in enumerate(exps)}
    E = np.array(exps, dtype=np.int64).reshape(len(exps), dim)
    deg = E.sum(axis=1)
    I, J, Kx = [], [], []
    for i, ei in enumerate(exps):
        room = order - deg[i]
        js = np.nonzero(deg <= room)[0]
        for j in js:
            I.append(i)
            J.append(j)
            Kx.append(rank[tuple(E[i] + E[j])])
    I = np.array(I, dtype=np.int64)
    J = np.array(J, dtype=np.int64)
    Kx = np.array(Kx, dtype=np.int64)
    scatter = sparse.csr_matrix(
        (np.ones(len(Kx)), (Kx, np.arange(len(Kx)))), shape=(len(exps), len(Kx))
    )
    fact = np.array([math.prod(math.factorial(int(a)) for a in e) for e in exps], dtype=float)
    n_lower = num_coeffs(dim, order - 1) if order >= 1 else 0
    src, fac = [], []
    for k in range(dim):
        s = np.empty(n_lower, dtype=np.int64)
        f = np.empty(n_lower, dtype=float)
        for i in range(n_lower):
            e = list(exps[i])
            f[i] = e[k] + 1
            e[k] += 1
            s[i] = rank[tuple(e)]
        src.append(s)
        fac.append(f)
    return _Table(dim, order, E, rank, I, J, scatter, fact, tuple(src), tuple(fac))


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices with ``|alpha| <= order`` in storage (graded-lex) order."""
    return [tuple(int(v) for v in row) for row in _table(dim, order).exponents]


class Jet:
    """Immutable truncated Taylor expansion of a complex function of ``dim`` reals."""

    __slots__ = ("dim", "order", "coeffs")

    def __init__(self, dim: int, order: int, coeffs):
        if dim < 1 or order < 0:
            raise ArgumentError(f"invalid jet shape dim={dim}, order={order}")
        c = np.array(coeffs, dtype=complex)
        if c.shape != (num_coeffs(dim, order),):
            raise ArgumentError(
                f"jet of dim {dim} and order {order} needs {num_coeffs(dim, order)} "
                f"coefficients, got shape {c.shape}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    @property
    def value(self) -> complex:
        return complex(self.coeffs[0])

    def _check(self, other: "Jet"):
        if other.dim != self.dim or other.order != self.order:
            raise ArgumentError(
                f"jet mismatch: (dim={self.dim}, order={self.order}) vs "
                f"(dim={other.dim}, order={other.order})"
            )

    def _lift(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return other.coeffs
        c = np.zeros_like(self.coeffs)
        c[0] = other
        return c

    def __add__(self, other):
        if isinstance(other, Jet):
            return jet_add(self, other)
        return Jet(self.dim, self.order, self._lift(other) + self.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return jet_neg(self)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return jet_scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, jet_analytic("pow_int", other, -1))
        return jet_scale(self, 1.0 / other)

    def __pow__(self, n: int):
        return jet_analytic("pow_int", self, n)

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.order}, value={self.value:.6g})"

    def as_dict(self) -> dict:
        """Map multi-index -> Taylor coefficient (not the partial derivative)."""
        return dict(zip(multi_indices(self.dim, self.order), self.coeffs.tolist()))


def jet_const(value, dim: int, order: int) -> Jet:
    c = np.zeros(num_coeffs(dim, order), dtype=complex)
    c[0] = value
    return Jet(dim, order, c)


def jet_var(index: int, value, dim: int, order: int) -> Jet:
    """Jet of the coordinate function in slot ``index`` at ``value``."""
    if not 0 <= index < dim:
        raise ArgumentError(f"coordinate index {index} out of range for dim {dim}")
    if order < 1:
        raise ArgumentError("a coordinate jet needs order >= 1")
    c = np.zeros(num_coeffs(dim, order), dtype=complex)
    c[0] = value
    c[1 + index] = 1.0
    return Jet(dim, order, c)


def _mul_coeffs(a: np.ndarray, b: np.ndarray, tab: _Table) -> np.ndarray:
    return tab.scatter @ (a[tab.I] * b[tab.J])


def _mul_batch(a: np.ndarray, b: np.ndarray, tab: _Table) -> np.ndarray:
    """Cauchy product over the last axis of broadcastable coefficient arrays."""
    prod = a[..., tab.I] * b[..., tab.J]
    shape = prod.shape[:-1]
    flat = prod.reshape(-1, prod.shape[-1])
    return (tab.scatter @ flat.T).T.reshape(shape + (tab.exponents.shape[0],))


def jet_add(a: Jet, b: Jet) -> Jet:
    a._check(b)
    return Jet(a.dim, a.order, a.coeffs + b.coeffs)


def jet_neg(a: Jet) -> Jet:
    return Jet(a.dim, a.order, -a.coeffs)


def jet_scale(a: Jet, s) -> Jet:
    return Jet(a.dim, a.order, a.coeffs * complex(s))


def jet_mul(a: Jet, b: Jet) -> Jet:
    a._check(b)
    return Jet(a.dim, a.order, _mul_coeffs(a.coeffs, b.coeffs, _table(a.dim, a.order)))


def extract_partial(a: Jet, alpha: Sequence[int]) -> complex:
    """The partial derivative ``d^alpha`` at the expansion point (``alpha! * c[alpha]``)."""
    alpha = tuple(int(v) for v in alpha)
    if len(alpha) != a.dim or min(alpha) < 0:
        raise ArgumentError(f"multi-index {alpha} does not fit dim {a.dim}")
    if sum(alpha) > a.order:
        raise ArgumentError(f"|alpha| = {sum(alpha)} exceeds jet order {a.order}")
    tab = _table(a.dim, a.order)
    i = tab.rank[alpha]
    return complex(a.coeffs[i] * tab.factorials[i])


def truncate(a: Jet, order: int) -> Jet:
    if order > a.order or order < 0:
        raise ArgumentError(f"cannot truncate order {a.order} jet to order {order}")
    return Jet(a.dim, order, a.coeffs[: num_coeffs(a.dim, order)])


def derivative(a: Jet, slot: int) -> Jet:
    """Jet of order ``K-1`` of the partial derivative in coordinate ``slot``."""
    if a.order < 1:
        raise ArgumentError("cannot differentiate an order-0 jet")
    if not 0 <= slot < a.dim:
        raise ArgumentError(f"slot {slot} out of range for dim {a.dim}")
    tab = _table(a.dim, a.order)
    return Jet(a.dim, a.order - 1, a.coeffs[tab.deriv_src[slot]] * tab.deriv_fac[slot])


def antiderivative(a: Jet, constant) -> Jet:
    """Univariate only: the antiderivative with given constant term, truncated to ``a.order``."""
    if a.dim != 1:
        raise ArgumentError("antiderivative is defined for univariate jets only")
    c = np.empty_like(a.coeffs)
    c[0] = constant
    k = np.arange(1, a.order + 1)
    c[1:] = a.coeffs[:-1] / k
    return Jet(1, a.order, c)


# ---------------------------------------------------------------- primitives


def branch_distance(name: str, z: complex, param=None) -> float:
    """Distance from ``z`` to the branch cut (or pole) of primitive ``name``."""
    z = complex(z)
    if name in ("log", "sqrt", "pow_complex"):
        return abs(z.imag) if z.real <= 0 else abs(z)
    if name == "arsinh":
        if abs(z.imag) >= 1:
            return abs(z.real)
        return math.hypot(z.real, 1 - abs(z.imag))
    if name == "pow_int" and param is not None and int(param) < 0:
        return abs(z)
    return math.inf


def _check_branch(name, z0, param=None):
    if branch_distance(name, z0, param) <= BRANCH_TOL:
        raise DomainError(f"{name}: argument {z0} lies on its branch cut or singularity")


def _series_pow(q: np.ndarray, p, K: int, g0=None) -> np.ndarray:
    """Power series of q(s)^p (principal branch at q[0] != 0) via Miller's recurrence."""
    q0 = q[0]
    g = np.zeros(K + 1, dtype=complex)
    g[0] = cmath.exp(p * cmath.log(q0)) if g0 is None else g0
    for k in range(1, K + 1):
        j = np.arange(1, min(k, len(q) - 1) + 1)
        if len(j):
            g[k] = np.sum(((p + 1) * j - k) * q[j] * g[k - j]) / (k * q0)
    return g


def taylor_coefficients(name: str, z0: complex, K: int, param=None) -> np.ndarray:
    """Taylor coefficients ``c_0..c_K`` of ``f(z0 + s)`` for an analytic primitive."""
    z0 = complex(z0)
    _check_branch(name, z0, param)
    k = np.arange(K + 1)
    inv_fact = np.array([1.0 / math.factorial(int(i)) for i in k])
    if name == "exp":
        return cmath.exp(z0) * inv_fact
    if name == "sin" or name == "cos":
        s, c = cmath.sin(z0), cmath.cos(z0)
        if name == "cos":
            s, c = c, -s  # cos(z0+h) = cos z0 cos h - sin z0 sin h
        out = np.empty(K + 1, dtype=complex)
        for i in range(K + 1):
            sign = -1 if (i // 2) % 2 else 1
            out[i] = sign * (s if i % 2 == 0 else c) * inv_fact[i]
        return out
    if name == "log":
        out = np.empty(K + 1, dtype=complex)
        out[0] = cmath.log(z0)
        if K:
            out[1:] = (-1.0) ** (k[1:] + 1) / (k[1:] * z0 ** k[1:])
        return out
    if name in ("sqrt", "pow_complex", "pow_int"):
        p = 0.5 if name == "sqrt" else param
        if name == "pow_int":
            p = int(p)
            if p >= 0:
                return np.array(
                    [math.comb(p, int(i)) * z0 ** (p - int(i)) if i <= p else 0.0 for i in k],
                    dtype=complex,
                )
            return _series_pow(np.array([z0, 1.0], dtype=complex), p, K, g0=z0**p)
        return _series_pow(np.array([z0, 1.0], dtype=complex), complex(p), K)
    if name == "arsinh":
        out = np.empty(K + 1, dtype=complex)
        out[0] = cmath.asinh(z0)
        if K:
            # arsinh'(z0 + s) = (1 + (z0 + s)^2)^(-1/2)
            g = _series_pow(np.array([1 + z0 * z0, 2 * z0, 1.0]), -0.5, K - 1)
            out[1:] = g / k[1:]
        return out
    raise ArgumentError(f"unknown analytic primitive {name!r}; known: {ANALYTIC_PRIMITIVES}")


def compose(coeffs: Sequence[complex], a: Jet) -> Jet:
    """Jet of ``f(a)`` where ``coeffs`` are the Taylor coefficients of ``f`` at ``a.value``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    tab = _table(a.dim, a.order)
    da = a.coeffs.copy()
    da[0] = 0.0
    K = min(a.order, len(coeffs) - 1)
    out = np.zeros_like(da)
    out[0] = coeffs[K]
    for i in range(K - 1, -1, -1):
        out = _mul_coeffs(out, da, tab)
        out[0] += coeffs[i]
    return Jet(a.dim, a.order, out)


def _int_power(a: Jet, n: int) -> Jet:
    tab = _table(a.dim, a.order)
    result = np.zeros_like(a.coeffs)
    result[0] = 1.0
    base = a.coeffs
    while n:
        if n & 1:
            result = _mul_coeffs(result, base, tab)
        n >>= 1
        if n:
            base = _mul_coeffs(base, base, tab)
    return Jet(a.dim, a.order, result)


def jet_analytic(f: str, a: Jet, param=None) -> Jet:
    """Apply analytic primitive ``f`` (principal branch) to the jet ``a``.

    ``param`` is the integer exponent for ``pow_int`` and the complex exponent
    for ``pow_complex``.
    """
    if f == "pow_int":
        if param is None:
            raise ArgumentError("pow_int needs an integer exponent")
        n = int(param)
        if n >= 0:
            return _int_power(a, n)
    if f == "pow_complex" and param is None:
        raise ArgumentError("pow_complex needs an exponent")
    return compose(taylor_coefficients(f, a.value, a.order, param), a)
