"""``polyharm`` command line: catalog, construct, verify, oracle and selftest.

Exit codes: 0 pass or success, 1 verification fail, 2 usage or validation
error, 3 numerical or domain trouble (including inconclusive verdicts).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import catalog as K
from . import constructors as C
from . import expr as E
from .errors import (
    ArgumentError,
    CapabilityError,
    CatalogLookupError,
    DomainError,
    NumericalError,
    PolyharmError,
    SamplingError,
    ValidationError,
)
from .groups import Point, load_spec, spec_to_dict
from .linalg import EigenPair, common_eigenvectors
from .operators import tau_fd_with_scale, tau_iter
from .verifier import SamplePlan, parse_guard, verify_isoparametric, verify_r_harmonic

FUNCTION_SCHEMA = "polyharm.function/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

_USAGE_ERRORS = (ArgumentError, ValidationError, CatalogLookupError)
_NUMERIC_ERRORS = (DomainError, NumericalError, SamplingError, CapabilityError)


def _cpx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _from_cpx(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(v[0], v[1])
    return complex(v)


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if s.endswith("i"):
        s = s[:-1] + "j"
    try:
        return complex(s)
    except ValueError:
        raise ArgumentError(f"not a number: {text!r}") from None


def parse_list(text: str | None) -> tuple | None:
    if text is None:
        return None
    return tuple(parse_complex(p) for p in text.split(",") if p.strip())


def _option_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


# ---------------------------------------------------------------- groups


class _Group:
    """A resolved ``--group``: catalog entry with parameters or a spec file."""

    def __init__(self, args):
        params = {k: getattr(args, k, None) for k in ("alpha", "beta", "gamma")}
        path = Path(args.group)
        if path.suffix == ".json" or path.is_file():
            if any(v is not None for v in params.values()):
                raise ArgumentError("--alpha/--beta/--gamma only apply to catalog groups")
            try:
                self.spec = load_spec(path)
            except FileNotFoundError:
                raise ArgumentError(f"group spec file not found: {path}") from None
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON ({exc})") from None
            self.name, self.params = None, {}
        else:
            inst = K.lookup(args.group, **params)
            self.spec, self.name, self.params = inst.spec, inst.entry.name, inst.params

    def need_catalog(self, what: str):
        if self.name is None:
            raise ArgumentError(f"{what} needs a catalog group, not a spec file")


# --------------------------------------------------------------- function files


def _poly_json(p):
    return [_cpx(v) for v in p] if p is not None else None


def function_document(field_, claim, order=None, Phi=None, Psi=None, provenance=None) -> dict:
    return {
        "schema": FUNCTION_SCHEMA,
        "claim": claim,
        "order": order,
        "Phi": _poly_json(Phi),
        "Psi": _poly_json(Psi),
        "expression": E.to_dict(field_),
        "display": str(field_),
        "hash": E.expr_hash(field_),
        "provenance": provenance or {},
    }


def load_function(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ArgumentError(f"function file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    if "schema" not in doc:  # a bare expression tree
        doc = {"claim": "r_harmonic", "expression": doc}
    elif doc["schema"] != FUNCTION_SCHEMA:
        raise ValidationError(f"{path}: unsupported schema {doc['schema']!r}")
    doc["field"] = E.from_dict(doc["expression"])
    for k in ("Phi", "Psi"):
        if doc.get(k) is not None:
            doc[k] = tuple(_from_cpx(v) for v in doc[k])
    return doc


def _write_json(obj, out: str | None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    return text


# ------------------------------------------------------------------ catalog


def cmd_catalog(args) -> int:
    if args.action == "list":
        if args.name is not None:
            raise ArgumentError("catalog list takes no name")
        entries = [K.entry_dict(K.get_entry(nm)) for nm in K.names()]
        for e in entries:
            extra = f" params {[p['name'] for p in e['parameters']]}" if e["parameters"] else ""
            print(f"{e['name']:6s} {e['kind']:10s} m={e['m']} n={e['n']}{extra} builtins {e['builtins']}")
        if args.out:
            _write_json({"schema": "polyharm.catalog/1", "entries": entries}, args.out)
        return EXIT_OK
    if args.name is None:
        raise ArgumentError("catalog show needs a group name")
    params = {k: getattr(args, k) for k in ("alpha", "beta", "gamma")}
    d = K.entry_dict(K.lookup(args.name, **params))
    d["schema"] = "polyharm.catalog/1"
    text = _write_json(d, args.out)
    if not args.out:
        print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------- construct


def _pick_vector(spec, vector, isotropic=False) -> EigenPair:
    if vector is not None:
        return EigenPair.from_vector(spec.family, np.asarray(vector, dtype=complex))
    pairs = common_eigenvectors(spec.family)
    if isotropic:
        pairs = [p for p in pairs if abs(np.dot(p.v, p.v)) <= C.ISOTROPY_TOL * max(1.0, np.vdot(p.v, p.v).real)]
        if not pairs:
            raise ArgumentError("no isotropic common eigenvector; pass --vector")
    if not pairs:
        raise ArgumentError("no common eigenvector found; pass --vector")
    return pairs[0]


def _eigen_block(ep: EigenPair) -> dict:
    return {"vector": [_cpx(v) for v in ep.v], "lambda": [_cpx(v) for v in ep.lam]}


def _base_pair(spec, args):
    """Isoparametric base function for eigenvector and ladder constructions."""
    if getattr(args, "base", None) == "re-im":
        ep = _pick_vector(spec, parse_list(args.vector), isotropic=True)
        re_p, im_p = C.re_im_parts(spec, ep)
        return (re_p if args.part == "real" else im_p), ep
    nu = parse_list(args.nu)
    ep = _pick_vector(spec, parse_list(args.vector), isotropic=nu is not None)
    if nu is not None:
        return C.eigenfunction_isotropic(spec, ep.v, nu), ep
    return C.isoparametric_from_eigenvector(spec, ep), ep


def _choose_ladder(Phi, Psi, r, c, numeric, z0):
    lam = Phi[1] if len(Phi) > 1 else 0
    nu, mu_ = Psi[0], Psi[2] if len(Psi) > 2 else 0
    scale = max(abs(lam), abs(mu_), abs(nu), 1e-300)
    if abs(nu) <= 1e-12 * scale:
        return C.fr_eigenfunction(lam, mu_, r, c)
    if abs(mu_) > 1e-12 * scale:
        return C.fr_linear_quadratic(lam, mu_, nu, r, c, numeric=numeric, z0=z0)
    if numeric:
        return C.fr_numeric(Phi, Psi, r, z0, c)
    raise CapabilityError("Psi is constant: no closed-form ladder; rerun with --numeric")


def cmd_construct(args) -> int:
    g = _Group(args)
    spec = g.spec
    coeffs = parse_list(args.coeffs)
    prov = {"group": spec.label(), "spec": spec_to_dict(spec), "method": args.method,
            "eigenpair": None, "ladder": None, "erratum_flags": []}
    if g.name == "G4.9" and args.method in ("eigenvector", "re-im", "ladder"):
        prov["erratum_flags"].append(K.FLAG_G49)
    m = args.method
    Phi = Psi = None
    if m in ("eigenvector", "isotropic"):
        if m == "isotropic" and args.nu is None:
            args.nu = ",".join(["1"] * spec.m)
        pair, ep = _base_pair(spec, args)
        field_, claim, order, Phi, Psi = pair.phi, "isoparametric", None, pair.Phi, pair.Psi
        if m == "isotropic":
            claim = "eigenfunction"
        prov["eigenpair"] = _eigen_block(ep)
    elif m == "re-im":
        ep = _pick_vector(spec, parse_list(args.vector), isotropic=True)
        re_p, im_p = C.re_im_parts(spec, ep)
        pair = re_p if args.part == "real" else im_p
        field_, claim, order, Phi, Psi = pair.phi, "isoparametric", None, pair.Phi, pair.Psi
        prov["eigenpair"] = _eigen_block(ep)
    elif m == "t-factor":
        order = args.r or 1
        field_ = C.t_power_factor(spec, args.k, order, coeffs or (1.0, 0.0))
        claim = "r_harmonic"
    elif m == "quadratic":
        v = parse_list(args.vector)
        B = None if args.matrix is None else np.array(json.loads(args.matrix), dtype=complex)
        a, b = (coeffs + (0, 0))[:2] if coeffs else (0, 0)
        if v is None and B is None and not coeffs:
            v = (1,) + (0,) * (spec.x_size - 1)
        field_ = C.quadratic_harmonic(spec, a, b, v, B)
        claim, order = "r_harmonic", 1
    elif m == "ladder":
        r = args.r or 1
        pair, ep = _base_pair(spec, args)
        lad = _choose_ladder(pair.Phi, pair.Psi, r, coeffs or (1.0, 0.0), args.numeric, parse_complex(args.z0))
        field_, claim, order = lad.compose(pair.phi), "r_harmonic", r
        prov["eigenpair"] = _eigen_block(ep)
        prov["ladder"] = {"provenance": lad.provenance.value, "case": lad.note,
                          "Phi": _poly_json(lad.Phi), "Psi": _poly_json(lad.Psi),
                          "z0": None if lad.z0 is None else _cpx(lad.z0)}
    elif m == "product":
        p = args.r or 2
        phi_t = C.t_power_factor(spec, args.k, p, coeffs or (1.0, 0.0))
        if args.psi:
            doc = load_function(args.psi)
            psi, q = doc["field"], args.q or doc.get("order") or 1
        else:
            psi, q = E.coord(f"x{spec.x_size}"), args.q or 1
        field_, order = C.separated_product(spec, phi_t, p, psi, q)
        claim = "r_harmonic"
        prov["factors"] = {"p": p, "q": q, "phi_t": str(phi_t), "psi": str(psi)}
    else:  # argparse restricts choices
        raise ArgumentError(f"unknown method {m!r}")
    doc = function_document(field_, claim, order, Phi, Psi, prov)
    _write_json(doc, args.out)
    print(f"{claim}{'' if order is None else f' (order {order})'}: {field_}")
    if Phi is not None:
        print(f"  {C.IsoparametricPair(field_, Phi, Psi).describe()}")
    if prov["erratum_flags"]:
        print(f"  errata: {', '.join(prov['erratum_flags'])}")
    if not args.out:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


# ------------------------------------------------------------------- verify


def _resolve_function(g: _Group, args, order):
    """(field, claim, r, pair, flags, id) for ``--function``."""
    ref = args.function
    opts = {}
    for item in args.option or []:
        if "=" not in item:
            raise ArgumentError(f"--option expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        opts[k.strip()] = _option_value(v)
    if ref.startswith("builtin:"):
        g.need_catalog("builtin functions")
        fid = ref[len("builtin:"):]
        b = K.get_entry(g.name).builtin(fid)
        if b.claim == "r_harmonic":
            r = args.r if args.r is not None else order
            res = K.builtin_result(g.name, fid, r=r, coefficients=parse_list(args.coeffs), params=g.params, **opts)
        else:
            if args.r is not None or args.coeffs is not None:
                raise ArgumentError(f"{fid} takes no --r or --coeffs")
            res = K.builtin_result(g.name, fid, params=g.params, **opts)
        pair = res.pair
        return res.expr, res.claim, res.r, pair, list(res.flags), fid
    if opts or args.r is not None or args.coeffs is not None:
        raise ArgumentError("--option/--r/--coeffs only apply to builtin: functions")
    doc = load_function(ref)
    pair = None
    if doc.get("Phi") is not None and doc.get("Psi") is not None:
        pair = C.IsoparametricPair(doc["field"], doc["Phi"], doc["Psi"])
    flags = list(doc.get("provenance", {}).get("erratum_flags", []))
    return doc["field"], doc.get("claim", "r_harmonic"), doc.get("order"), pair, flags, Path(ref).name


def cmd_verify(args) -> int:
    g = _Group(args)
    spec = g.spec
    field_, claim, r_claimed, pair, flags, fid = _resolve_function(g, args, args.order)
    claim = args.claim or claim
    box = None if args.box is None else json.loads(args.box)
    plan = SamplePlan(seed=args.seed, count=args.samples, box=box,
                      guards=tuple(parse_guard(s) for s in args.guard or ()),
                      full_oracle=args.full_oracle)
    if claim == "r_harmonic":
        order = args.order or r_claimed
        if order is None:
            raise ArgumentError("--order is required for r-harmonic claims")
        rep = verify_r_harmonic(spec, field_, order, plan, tol_zero=args.tol_zero,
                                tol_nonzero=args.tol_nonzero, function_id=fid, flags=flags)
    elif claim in ("isoparametric", "eigenfunction"):
        if pair is None:
            raise ArgumentError(f"{claim} claims need Phi and Psi (function file or builtin pair)")
        rep = verify_isoparametric(spec, pair, plan, tol=args.tol, function_id=fid, flags=flags, claim=claim)
    else:
        raise ArgumentError(f"unknown claim {claim!r}")
    if args.out:
        Path(args.out).write_text(rep.to_json() + "\n")
    print(rep.summary())
    if args.json:
        print(rep.to_json())
    return {"pass": EXIT_OK, "fail": EXIT_FAIL}.get(rep.verdict, EXIT_NUMERIC)


# ------------------------------------------------------------------- oracle


def cmd_oracle(args) -> int:
    g = _Group(args)
    spec = g.spec
    field_, *_ = _resolve_function(g, args, args.order or 1)
    coords = [float(v.real) for v in parse_list(args.point)]
    pt = Point.from_coords(spec, coords)
    jet = tau_iter(spec, field_, pt, 1).values[1]
    fd = tau_fd_with_scale(spec, field_, pt, h=args.h)
    diff = abs(jet - fd.value)
    ref = max(fd.scale, abs(jet), 1e-300)
    print(f"point      {dict(zip(spec.coord_names, coords))}")
    print(f"{'':10s} {'real':>24s} {'imag':>24s}")
    print(f"{'jet':10s} {jet.real:24.15e} {jet.imag:24.15e}")
    print(f"{'fd':10s} {fd.value.real:24.15e} {fd.value.imag:24.15e}")
    print(f"|diff| {diff:.3e}  relative {diff / ref:.3e}  (term scale {fd.scale:.3e}, rounding floor {fd.noise:.1e})")
    if args.json:
        print(json.dumps({"point": coords, "jet": _cpx(jet), "fd": _cpx(fd.value), "abs_diff": diff,
                          "rel_diff": diff / ref, "scale": fd.scale, "noise": fd.noise}, sort_keys=True))
    return EXIT_OK


# ----------------------------------------------------------------- selftest


def cmd_selftest(args) -> int:
    from .acceptance import run_all

    which = [int(k) for k in args.only.split(",")] if args.only else None
    results = run_all(which, echo=print)
    for res in results:
        if args.verbose or not res.passed:
            for d in res.details:
                print(f"    {d}")
    total = sum(r.seconds for r in results)
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed in {total:.1f} s")
    return EXIT_OK if ok else EXIT_FAIL


# ------------------------------------------------------------------- parser


def _group_flags(p, required=True):
    p.add_argument("--group", required=required, help="catalog name (e.g. Sol3, G4.9) or group-spec JSON file")
    for k in ("alpha", "beta", "gamma"):
        p.add_argument(f"--{k}", type=float)


def _function_flags(p):
    p.add_argument("--function", required=True, help="function file or builtin:<id>")
    p.add_argument("--r", type=int, help="ladder level for builtin functions (defaults to --order)")
    p.add_argument("--coeffs", help="comma-separated coefficients for builtin functions")
    p.add_argument("--option", action="append", help="builtin option key=value (value parsed as JSON)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyharm", description="Polyharmonic functions on semidirect-product Lie groups.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list or show registered groups")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?")
    for k in ("alpha", "beta", "gamma"):
        p.add_argument(f"--{k}", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("construct", help="build a function and write a function file")
    _group_flags(p)
    p.add_argument("--method", required=True,
                   choices=("eigenvector", "isotropic", "re-im", "t-factor", "quadratic", "ladder", "product"))
    p.add_argument("--r", type=int, help="ladder level, t-factor order, or t-order p for product")
    p.add_argument("--coeffs", help="comma-separated coefficients (c1,c2 or a,b for quadratic)")
    p.add_argument("--vector", help="common eigenvector of the transposed family, e.g. 1,1j")
    p.add_argument("--nu", help="exponent vector for isotropic eigenfunctions")
    p.add_argument("--part", choices=("real", "imag"), default="real")
    p.add_argument("--base", choices=("eigenvector", "re-im"), default="eigenvector",
                   help="base function of a ladder construction")
    p.add_argument("--matrix", help="quadratic form B as a JSON nested list")
    p.add_argument("--k", type=int, default=1, help="t-coordinate index (1-based)")
    p.add_argument("--psi", help="function file for the x-factor of a product")
    p.add_argument("--q", type=int, help="order of the x-factor")
    p.add_argument("--numeric", action="store_true", help="allow quadrature ladders")
    p.add_argument("--z0", default="0", help="base point of numeric ladders")
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="certify a claim by sampling")
    _group_flags(p)
    _function_flags(p)
    p.add_argument("--order", type=int)
    p.add_argument("--claim", choices=("r_harmonic", "isoparametric", "eigenfunction"))
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--box", help="JSON list of [lo, hi] per coordinate")
    p.add_argument("--guard", action="append", help="sampling constraint such as 'x1 > 0.1'")
    p.add_argument("--tol-zero", type=float, default=1e-8)
    p.add_argument("--tol-nonzero", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-9, help="isoparametric tolerance")
    p.add_argument("--full-oracle", action="store_true")
    p.add_argument("--json", action="store_true", help="also print the report JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="compare jet and finite-difference operators")
    p.add_argument("operator", choices=("tau",))
    _group_flags(p)
    _function_flags(p)
    p.add_argument("--order", type=int)
    p.add_argument("--point", required=True, help="comma-separated coordinates (t..., [xi], x...)")
    p.add_argument("--h", type=float, default=1e-3, help="finite-difference step (Richardson-combined with 2h)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--verbose", "-v", action="store_true")
    p.set_defaults(func=cmd_selftest)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERIC_ERRORS as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PolyharmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
