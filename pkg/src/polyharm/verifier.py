"""Sampling-based certification of r-harmonic, isoparametric and eigenfunction claims."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import expr as E
from .errors import ArgumentError, DomainError, NumericalError, SamplingError
from .expr import FieldExpr
from .groups import GroupSpec, Point, spec_to_dict
from .operators import (
    check_field,
    coefficient_jets,
    eval_jet,
    kappa_jet,
    tau_fd_with_scale,
    tau_iter,
    tau_jet,
)

__all__ = [
    "REPORT_SCHEMA",
    "Guard",
    "SamplePlan",
    "Report",
    "default_box",
    "branch_guards",
    "parse_guard",
    "sample_points",
    "verify_r_harmonic",
    "verify_isoparametric",
    "verify_eigenfunction",
]

REPORT_SCHEMA = "polyharm.report/1"
GUARD_MARGIN = 0.05
ORACLE_POINTS = 5
ORACLE_TOL = 1e-5


@dataclass(frozen=True)
class Guard:
    """A constraint on sample points: a coordinate bound or a branch-cut margin."""

    description: str
    coord: str | None = None
    op: str | None = None
    bound: float | None = None
    node: FieldExpr | None = field(default=None, compare=False)
    margin: float = GUARD_MARGIN

    def holds(self, env: dict) -> bool:
        if self.coord is not None:
            x = env[self.coord].real
            return {
                ">": x > self.bound,
                ">=": x >= self.bound,
                "<": x < self.bound,
                "<=": x <= self.bound,
            }[self.op]
        try:
            z = E.evaluate(self.node.args[0], env)
        except (DomainError, ZeroDivisionError, OverflowError, ValueError):
            return False
        if not np.isfinite(z):
            return False
        return E.node_margin(self.node, z) >= self.margin


_GUARD_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*(>=|<=|>|<)\s*([-+0-9.eE]+)\s*$")


def parse_guard(text: str) -> Guard:
    """``"x1 > 0.1"``-style coordinate constraints."""
    m = _GUARD_RE.match(text)
    if not m:
        raise ArgumentError(f"cannot parse guard {text!r}; expected e.g. 'x1 > 0.1'")
    try:
        bound = float(m.group(3))
    except ValueError:
        raise ArgumentError(f"guard bound {m.group(3)!r} is not a number") from None
    return Guard(text.strip(), m.group(1), m.group(2), bound)


def branch_guards(field_: FieldExpr, margin: float = GUARD_MARGIN) -> list[Guard]:
    """One guard per log/sqrt/pow/arsinh/pole/ladder node, keeping its argument off the cut."""
    out, seen = [], set()
    for path, node in E.branch_nodes(field_):
        key = (node.op, node.param if node.op != "holo" else id(node.param), E.expr_hash(node.args[0]))
        if key in seen:
            continue
        seen.add(key)
        out.append(Guard(f"{node.op} at {path}: margin >= {margin:g}", node=node, margin=margin))
    return out


def default_box(spec: GroupSpec) -> tuple:
    """``t, xi`` in [-1, 1] and ``x`` in [0.2, 2]."""
    box = [(-1.0, 1.0)] * spec.m
    if spec.heisenberg:
        box.append((-1.0, 1.0))
    return tuple(box + [(0.2, 2.0)] * spec.x_size)


@dataclass(frozen=True)
class SamplePlan:
    seed: int = 0
    count: int = 200
    box: tuple | None = None
    guards: tuple = ()
    oracle_points: int = ORACLE_POINTS
    full_oracle: bool = False

    def resolved_box(self, spec: GroupSpec) -> tuple:
        box = default_box(spec) if self.box is None else tuple(tuple(map(float, b)) for b in self.box)
        if len(box) != spec.dim:
            raise ArgumentError(f"box needs {spec.dim} intervals {spec.coord_names}, got {len(box)}")
        for (lo, hi), nm in zip(box, spec.coord_names):
            if not lo <= hi:
                raise ArgumentError(f"empty interval for {nm}: [{lo}, {hi}]")
        return box

    def with_field(self, field_: FieldExpr) -> "SamplePlan":
        """Plan with the field's branch guards appended."""
        return SamplePlan(
            self.seed, self.count, self.box, tuple(self.guards) + tuple(branch_guards(field_)),
            self.oracle_points, self.full_oracle,
        )

    def describe(self, spec: GroupSpec) -> dict:
        return {
            "seed": self.seed,
            "count": self.count,
            "box": [list(b) for b in self.resolved_box(spec)],
            "guards": [g.description for g in self.guards],
        }


def sample_points(spec: GroupSpec, plan: SamplePlan) -> list[Point]:
    """``plan.count`` guarded points from a seeded scrambled Halton sequence."""
    if plan.count < 1:
        raise ArgumentError("sample count must be positive")
    box = plan.resolved_box(spec)
    names = spec.coord_names
    for g in plan.guards:
        if g.coord is not None and g.coord not in names:
            raise ArgumentError(f"guard {g.description!r} names unknown coordinate {g.coord!r}")
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    budget = 10 * plan.count
    raw = qmc.Halton(d=spec.dim, scramble=True, seed=plan.seed).random(budget)
    pts = lo + raw * (hi - lo)
    out = []
    for row in pts:
        env = {nm: complex(v) for nm, v in zip(names, row)}
        if all(g.holds(env) for g in plan.guards):
            out.append(Point.from_coords(spec, row))
            if len(out) == plan.count:
                return out
    raise SamplingError(
        f"only {len(out)} of {budget} candidate points satisfy the guards "
        f"({[g.description for g in plan.guards]}); try a larger or shifted box"
    )


# -------------------------------------------------------------------- reports


def _cpx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


@dataclass
class Report:
    claim: str
    spec: dict
    function: dict
    parameters: dict
    plan: dict
    tolerances: dict
    residuals: list
    lower_magnitudes: list
    max_residual: float
    mean_residual: float
    scale: float
    nonvanishing: float | None
    oracle: dict
    verdict: str
    erratum_flags: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    schema: str = REPORT_SCHEMA

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def relative_residual(self) -> float:
        return self.max_residual / self.scale if self.scale > 0 else (0.0 if self.max_residual == 0 else math.inf)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=kw.pop("indent", 2), **kw)

    def summary(self) -> str:
        rel = self.relative_residual
        s = f"{self.claim} [{self.spec.get('label')}]: {self.verdict} (max residual/scale {rel:.3e}"
        if self.nonvanishing is not None and self.scale > 0:
            s += f", nonvanishing/scale {self.nonvanishing / self.scale:.3e}"
        s += f", oracle max rel err {self.oracle.get('max_rel_err', float('nan')):.2e})"
        if self.erratum_flags:
            s += f" errata: {', '.join(self.erratum_flags)}"
        return s


def _spec_block(spec: GroupSpec) -> dict:
    d = spec_to_dict(spec)
    d["label"] = spec.label()
    d["omega"] = list(spec.omega)
    return d


def _function_block(field_: FieldExpr, function_id: str | None) -> dict:
    return {"id": function_id or "", "hash": E.expr_hash(field_), "expression": str(field_)}


def _points_for(spec, field_, plan):
    plan = plan or SamplePlan()
    check_field(field_, spec)
    full = plan.with_field(field_)
    return full, sample_points(spec, full)


def _oracle_check(spec, field_, points, jet_tau, n, seed) -> dict:
    """Compare jet tau with the finite-difference tau at ``n`` seeded sample indices."""
    if n <= 0 or not points:
        return {"points": 0, "max_rel_err": 0.0, "agreed": True}
    rng = np.random.default_rng(seed + 7919)
    idx = sorted(rng.choice(len(points), size=min(n, len(points)), replace=False).tolist())
    worst = 0.0
    failures = 0
    for i in idx:
        try:
            fd = tau_fd_with_scale(spec, field_, points[i])
        except (DomainError, ZeroDivisionError, OverflowError):
            failures += 1
            continue
        # the rounding floor of the stencil counts as agreement
        ref = max(fd.scale, abs(jet_tau[i]), fd.noise / ORACLE_TOL, 1e-300)
        worst = max(worst, abs(fd.value - jet_tau[i]) / ref)
    return {
        "points": len(idx) - failures,
        "indices": idx,
        "max_rel_err": worst,
        "agreed": worst <= ORACLE_TOL and failures < len(idx),
    }


def verify_r_harmonic(
    spec: GroupSpec,
    field_: FieldExpr,
    r: int,
    plan: SamplePlan | None = None,
    tol_zero: float = 1e-8,
    tol_nonzero: float = 1e-3,
    function_id: str | None = None,
    flags: Sequence[str] = (),
    notes: Sequence[str] = (),
) -> Report:
    """Certify ``tau^r(field) = 0`` with ``tau^(r-1)(field)`` not identically zero.

    ``scale`` is the largest ``|tau^a(field)|`` over samples and ``a = 0..r``.
    """
    if r < 1:
        raise ArgumentError("r must be >= 1")
    plan, points = _points_for(spec, field_, plan)
    residuals, lower, tau1 = [], [], []
    kept, errors = [], []
    scale = 0.0
    for p in points:
        try:
            vals = tau_iter(spec, field_, p, r).values
        except (DomainError, ZeroDivisionError, OverflowError) as exc:
            errors.append(str(exc))
            continue
        if not all(np.isfinite(v) for v in vals):
            errors.append(f"non-finite value at {p.coords}")
            continue
        kept.append(p)
        residuals.append(vals[r])
        lower.append(abs(vals[r - 1]))
        tau1.append(vals[1])
        scale = max(scale, max(abs(v) for v in vals))
    n_or = len(kept) if plan.full_oracle else plan.oracle_points
    oracle = _oracle_check(spec, field_, kept, tau1, n_or, plan.seed)
    mags = [abs(v) for v in residuals]
    max_res = max(mags, default=0.0)
    mean_res = float(np.mean(mags)) if mags else 0.0
    nonvan = max(lower, default=0.0)
    note_list = list(notes)
    if len(errors) > 0.5 * len(points):
        verdict = "inconclusive"
        note_list.append(f"domain errors at {len(errors)} of {len(points)} samples")
    elif scale == 0.0:
        verdict = "fail"
        note_list.append("field vanishes at every sample")
    elif max_res <= tol_zero * scale and nonvan >= tol_nonzero * scale:
        verdict = "pass" if oracle["agreed"] else "inconclusive"
        if not oracle["agreed"]:
            note_list.append("jet and finite-difference tension fields disagree")
    else:
        verdict = "fail"
        if max_res > tol_zero * scale:
            note_list.append(f"tau^{r} does not vanish")
        if nonvan < tol_nonzero * scale:
            note_list.append(f"tau^{r - 1} vanishes at all samples (not proper)")
    return Report(
        claim="r_harmonic",
        spec=_spec_block(spec),
        function=_function_block(field_, function_id),
        parameters={"r": r},
        plan=plan.describe(spec),
        tolerances={"tol_zero": tol_zero, "tol_nonzero": tol_nonzero, "oracle": ORACLE_TOL},
        residuals=[_cpx(v) for v in residuals],
        lower_magnitudes=lower,
        max_residual=max_res,
        mean_residual=mean_res,
        scale=scale,
        nonvanishing=nonvan,
        oracle=oracle,
        verdict=verdict,
        erratum_flags=list(flags),
        notes=note_list,
        diagnostics={"evaluated": len(kept), "domain_errors": len(errors), "first_errors": errors[:3]},
    )


def _poly(coeffs, z):
    out = 0j
    for c in reversed(coeffs):
        out = out * z + c
    return out


def verify_isoparametric(
    spec: GroupSpec,
    pair,
    plan: SamplePlan | None = None,
    tol: float = 1e-9,
    function_id: str | None = None,
    flags: Sequence[str] = (),
    claim: str = "isoparametric",
    parameters: dict | None = None,
) -> Report:
    """Check ``tau(phi) = Phi(phi)`` and ``kappa(phi, phi) = Psi(phi)`` at every sample.

    Each sample is judged relative to its own largest term.
    """
    phi = pair.phi
    plan, points = _points_for(spec, phi, plan)
    residuals, worst_rel, tau1, kept, errors = [], 0.0, [], [], []
    scale = 0.0
    rels = []
    for p in points:
        try:
            j = eval_jet(phi, spec, p, 2)
        except (DomainError, ZeroDivisionError, OverflowError) as exc:
            errors.append(str(exc))
            continue
        c = coefficient_jets(spec, p, 0)
        t = tau_jet(spec, j, c).value
        k = kappa_jet(spec, j, j, p).value
        z = j.value
        a, b = _poly(pair.Phi, z), _poly(pair.Psi, z)
        res = max(abs(t - a), abs(k - b))
        sc = max(abs(t), abs(a), abs(k), abs(b))
        residuals.append(complex(t - a) if abs(t - a) >= abs(k - b) else complex(k - b))
        rels.append(res / sc if sc > 0 else (0.0 if res == 0 else math.inf))
        scale = max(scale, sc)
        kept.append(p)
        tau1.append(t)
    oracle = _oracle_check(
        spec, phi, kept, tau1, len(kept) if plan.full_oracle else plan.oracle_points, plan.seed
    )
    mags = [abs(v) for v in residuals]
    worst_rel = max(rels, default=0.0)
    notes = []
    if len(errors) > 0.5 * len(points):
        verdict = "inconclusive"
        notes.append(f"domain errors at {len(errors)} of {len(points)} samples")
    elif worst_rel <= tol:
        verdict = "pass" if oracle["agreed"] else "inconclusive"
        if not oracle["agreed"]:
            notes.append("jet and finite-difference tension fields disagree")
    else:
        verdict = "fail"
        notes.append(f"worst per-sample relative residual {worst_rel:.3e} exceeds {tol:g}")
    params = {"Phi": [_cpx(v) for v in pair.Phi], "Psi": [_cpx(v) for v in pair.Psi]}
    params.update(parameters or {})
    return Report(
        claim=claim,
        spec=_spec_block(spec),
        function=_function_block(phi, function_id),
        parameters=params,
        plan=plan.describe(spec),
        tolerances={"tol": tol, "oracle": ORACLE_TOL},
        residuals=[_cpx(v) for v in residuals],
        lower_magnitudes=[],
        max_residual=max(mags, default=0.0),
        mean_residual=float(np.mean(mags)) if mags else 0.0,
        scale=scale,
        nonvanishing=None,
        oracle=oracle,
        verdict=verdict,
        erratum_flags=list(flags),
        notes=notes,
        diagnostics={
            "evaluated": len(kept),
            "domain_errors": len(errors),
            "first_errors": errors[:3],
            "max_relative_residual": worst_rel,
        },
    )


def verify_eigenfunction(
    spec: GroupSpec,
    field_: FieldExpr,
    lam: complex,
    mu_: complex,
    plan: SamplePlan | None = None,
    tol: float = 1e-9,
    function_id: str | None = None,
    flags: Sequence[str] = (),
) -> Report:
    """``tau(phi) = lam phi`` and ``kappa(phi, phi) = mu phi^2``."""
    from .constructors import IsoparametricPair

    pair = IsoparametricPair(field_, (0, complex(lam)), (0, 0, complex(mu_)))
    return verify_isoparametric(
        spec, pair, plan, tol, function_id, flags, claim="eigenfunction",
        parameters={"lambda": _cpx(lam), "mu": _cpx(mu_)},
    )
