"""Serializable expression trees for smooth complex functions of group coordinates.

Nodes: ``const``, ``coord``, ``add``, ``mul``, ``neg``, ``pow_int``,
``pow_complex``, ``exp``, ``log``, ``sqrt``, ``sin``, ``cos``, ``arsinh`` and
``holo`` (a holomorphic ladder function applied to a sub-expression, for
ladders that have no closed form).  Coordinates are named ``t1..tm``, ``xi``,
``x1..xN``; univariate ladder functions use the coordinate ``z``.
"""

from __future__ import annotations

import cmath
import hashlib
import json
import numbers
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Mapping

from .errors import ArgumentError, DomainError, ValidationError
from .jets import BRANCH_TOL, Jet, branch_distance, compose, jet_analytic

__all__ = [
    "FieldExpr",
    "OPS",
    "const",
    "coord",
    "exp",
    "log",
    "sqrt",
    "sin",
    "cos",
    "arsinh",
    "pow_int",
    "pow_complex",
    "holo",
    "add",
    "mul",
    "as_expr",
    "coordinates",
    "substitute",
    "evaluate",
    "eval_jets",
    "branch_nodes",
    "to_dict",
    "from_dict",
    "dumps",
    "loads",
    "expr_hash",
    "register_holo_loader",
]

OPS = (
    "const", "coord", "add", "mul", "neg", "pow_int", "pow_complex",
    "exp", "log", "sqrt", "sin", "cos", "arsinh", "holo",
)
_UNARY = ("neg", "exp", "log", "sqrt", "sin", "cos", "arsinh")
BRANCHED = ("log", "sqrt", "pow_complex", "arsinh")


@dataclass(frozen=True)
class FieldExpr:
    op: str
    args: tuple = ()
    param: Any = None

    def __post_init__(self):
        if self.op not in OPS:
            raise ValidationError(f"unknown expression op {self.op!r}")

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, -as_expr(other))

    def __rsub__(self, other):
        return add(other, -self)

    def __neg__(self):
        return FieldExpr("neg", (self,))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        other = as_expr(other)
        if other.op == "const":
            return mul(self, const(1 / other.param))
        return mul(self, pow_int(other, -1))

    def __rtruediv__(self, other):
        return mul(other, pow_int(self, -1))

    def __pow__(self, p):
        if isinstance(p, numbers.Integral):
            return pow_int(self, int(p))
        return pow_complex(self, p)

    def __str__(self):
        return _render(self)


def as_expr(v) -> FieldExpr:
    if isinstance(v, FieldExpr):
        return v
    if isinstance(v, numbers.Number):
        return const(v)
    raise ArgumentError(f"cannot convert {type(v).__name__} to an expression")


def const(v) -> FieldExpr:
    return FieldExpr("const", (), complex(v))


def coord(name: str) -> FieldExpr:
    return FieldExpr("coord", (), str(name))


def add(*terms) -> FieldExpr:
    terms = tuple(as_expr(t) for t in terms)
    return terms[0] if len(terms) == 1 else FieldExpr("add", terms)


def mul(*factors) -> FieldExpr:
    factors = tuple(as_expr(f) for f in factors)
    return factors[0] if len(factors) == 1 else FieldExpr("mul", factors)


def _unary(op):
    def build(e) -> FieldExpr:
        return FieldExpr(op, (as_expr(e),))

    build.__name__ = op
    return build


exp = _unary("exp")
log = _unary("log")
sqrt = _unary("sqrt")
sin = _unary("sin")
cos = _unary("cos")
arsinh = _unary("arsinh")


def pow_int(e, n: int) -> FieldExpr:
    return FieldExpr("pow_int", (as_expr(e),), int(n))


def pow_complex(e, p) -> FieldExpr:
    return FieldExpr("pow_complex", (as_expr(e),), complex(p))


def holo(fn, e) -> FieldExpr:
    """``fn(e)`` for a holomorphic function object exposing ``value``, ``taylor``,
    ``domain_margin`` and ``to_dict``."""
    return FieldExpr("holo", (as_expr(e),), fn)


# ------------------------------------------------------------------ traversal


def coordinates(e: FieldExpr) -> set[str]:
    if e.op == "coord":
        return {e.param}
    out: set[str] = set()
    for a in e.args:
        out |= coordinates(a)
    return out


def substitute(e: FieldExpr, mapping: Mapping[str, FieldExpr]) -> FieldExpr:
    if e.op == "coord":
        return as_expr(mapping[e.param]) if e.param in mapping else e
    if not e.args:
        return e
    return FieldExpr(e.op, tuple(substitute(a, mapping) for a in e.args), e.param)


def branch_nodes(e: FieldExpr, path: str = "$") -> Iterator[tuple[str, FieldExpr]]:
    """Nodes whose argument must stay away from a cut or pole."""
    if e.op in BRANCHED or e.op == "holo" or (e.op == "pow_int" and e.param < 0):
        yield path, e
    for i, a in enumerate(e.args):
        yield from branch_nodes(a, f"{path}.{e.op}[{i}]")


def node_margin(node: FieldExpr, z: complex) -> float:
    """Distance-like margin of the argument value ``z`` from the node's singular set."""
    if node.op == "holo":
        return node.param.domain_margin(z)
    return branch_distance(node.op, z, node.param)


# ----------------------------------------------------------------- evaluation

_SCALAR = {
    "exp": cmath.exp,
    "log": cmath.log,
    "sqrt": cmath.sqrt,
    "sin": cmath.sin,
    "cos": cmath.cos,
    "arsinh": cmath.asinh,
}


def _walk(e: FieldExpr, leaf: Callable, apply: Callable, memo: dict, path: str):
    key = id(e)
    if key in memo:
        return memo[key]
    if e.op == "const":
        out = leaf("const", e.param)
    elif e.op == "coord":
        out = leaf("coord", e.param)
    else:
        vals = [_walk(a, leaf, apply, memo, f"{path}.{e.op}[{i}]") for i, a in enumerate(e.args)]
        if e.op in BRANCHED or e.op == "holo" or (e.op == "pow_int" and e.param < 0):
            z = vals[0].value if isinstance(vals[0], Jet) else vals[0]
            if node_margin(e, z) <= BRANCH_TOL:
                raise DomainError(f"{e.op} at {path}: argument {complex(z):.6g} is on a branch cut")
        out = apply(e, vals)
    memo[key] = out
    return out


def evaluate(e: FieldExpr, env: Mapping[str, complex]) -> complex:
    """Plain (order-0) complex value with principal branches."""

    def leaf(kind, v):
        if kind == "const":
            return v
        try:
            return complex(env[v])
        except KeyError:
            raise ArgumentError(f"coordinate {v!r} is not bound") from None

    def apply(node, vals):
        op = node.op
        if op == "add":
            return sum(vals[1:], vals[0])
        if op == "mul":
            out = vals[0]
            for v in vals[1:]:
                out = out * v
            return out
        if op == "neg":
            return -vals[0]
        if op == "pow_int":
            return vals[0] ** node.param
        if op == "pow_complex":
            return cmath.exp(node.param * cmath.log(vals[0]))
        if op == "holo":
            return complex(node.param.value(vals[0]))
        return _SCALAR[op](vals[0])

    return complex(_walk(e, leaf, apply, {}, "$"))


def eval_jets(e: FieldExpr, env: Mapping[str, Jet]) -> Jet:
    """Jet of the expression given jets for every coordinate it uses."""
    proto = next(iter(env.values()))

    def leaf(kind, v):
        if kind == "const":
            return Jet(proto.dim, proto.order, [v] + [0] * (len(proto.coeffs) - 1))
        try:
            return env[v]
        except KeyError:
            raise ArgumentError(f"coordinate {v!r} is not bound") from None

    def apply(node, vals):
        op = node.op
        if op == "add":
            return Jet(proto.dim, proto.order, sum(v.coeffs for v in vals))
        if op == "mul":
            out = vals[0]
            for v in vals[1:]:
                out = out * v
            return out
        if op == "neg":
            return -vals[0]
        if op == "pow_int":
            return jet_analytic("pow_int", vals[0], node.param)
        if op == "pow_complex":
            return jet_analytic("pow_complex", vals[0], node.param)
        if op == "holo":
            return compose(node.param.taylor(vals[0].value, proto.order), vals[0])
        return jet_analytic(op, vals[0])

    return _walk(e, leaf, apply, {}, "$")


# -------------------------------------------------------------- serialization

_HOLO_LOADERS: dict[str, Callable[[dict], Any]] = {}


def register_holo_loader(kind: str, loader: Callable[[dict], Any]) -> None:
    _HOLO_LOADERS[kind] = loader


def _cpx(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def to_dict(e: FieldExpr) -> dict:
    if e.op == "const":
        return {"op": "const", "value": _cpx(e.param)}
    if e.op == "coord":
        return {"op": "coord", "name": e.param}
    out: dict = {"op": e.op, "args": [to_dict(a) for a in e.args]}
    if e.op == "pow_int":
        out["n"] = e.param
    elif e.op == "pow_complex":
        out["exponent"] = _cpx(e.param)
    elif e.op == "holo":
        out["function"] = e.param.to_dict()
    return out


def _parse_cpx(v, where) -> complex:
    if isinstance(v, numbers.Real):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(p, numbers.Real) for p in v):
        return complex(v[0], v[1])
    raise ValidationError(f"{where}: complex values are [re, im] pairs, got {v!r}")


def from_dict(d: dict) -> FieldExpr:
    if not isinstance(d, dict) or "op" not in d:
        raise ValidationError(f"expression node must be an object with 'op', got {d!r}")
    op = d["op"]
    if op not in OPS:
        raise ValidationError(f"unknown expression op {op!r}")
    if op == "const":
        return const(_parse_cpx(d.get("value"), "const"))
    if op == "coord":
        if not isinstance(d.get("name"), str):
            raise ValidationError("coord node needs a string 'name'")
        return coord(d["name"])
    args = d.get("args")
    if not isinstance(args, list) or not args:
        raise ValidationError(f"{op} node needs a non-empty 'args' list")
    kids = tuple(from_dict(a) for a in args)
    if (op in _UNARY or op in ("pow_int", "pow_complex", "holo")) and len(kids) != 1:
        raise ValidationError(f"{op} takes exactly one argument")
    if op == "pow_int":
        if not isinstance(d.get("n"), int):
            raise ValidationError("pow_int node needs an integer 'n'")
        return FieldExpr(op, kids, d["n"])
    if op == "pow_complex":
        return FieldExpr(op, kids, _parse_cpx(d.get("exponent"), "pow_complex"))
    if op == "holo":
        fn = d.get("function") or {}
        loader = _HOLO_LOADERS.get(fn.get("kind"))
        if loader is None:
            raise ValidationError(f"unknown holomorphic function kind {fn.get('kind')!r}")
        return FieldExpr(op, kids, loader(fn))
    return FieldExpr(op, kids)


def dumps(e: FieldExpr, **kw) -> str:
    return json.dumps(to_dict(e), **kw)


def loads(s: str) -> FieldExpr:
    return from_dict(json.loads(s))


def expr_hash(e: FieldExpr) -> str:
    canon = json.dumps(to_dict(e), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ------------------------------------------------------------------ rendering


def _fmt_c(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:g}"
    if z.real == 0:
        return f"{z.imag:g}i"
    return f"({z.real:g}{z.imag:+g}i)"


def _render(e: FieldExpr) -> str:
    op = e.op
    if op == "const":
        return _fmt_c(e.param)
    if op == "coord":
        return e.param
    if op == "add":
        return "(" + " + ".join(_render(a) for a in e.args) + ")"
    if op == "mul":
        return "*".join(_render(a) for a in e.args)
    if op == "neg":
        return "-" + _render(e.args[0])
    if op == "pow_int":
        return f"{_render(e.args[0])}^{e.param}"
    if op == "pow_complex":
        return f"{_render(e.args[0])}^{_fmt_c(e.param)}"
    if op == "holo":
        return f"{e.param.to_dict().get('kind', 'f')}({_render(e.args[0])})"
    return f"{op}({_render(e.args[0])})"
