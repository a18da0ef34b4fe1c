"""The worked-example acceptance suite, shared by ``polyharm selftest`` and the tests.

Each ``criterion_N`` returns a :class:`CriterionResult`; nothing here raises on
a failed check, so a run always reports every criterion.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import catalog as K
from . import expr as E
from .constructors import isoparametric_from_eigenvector
from .groups import Point, build_spec
from .linalg import common_eigenvectors, make_test_family
from .operators import (
    chain_rule_residual,
    eval_jet,
    kappa,
    product_rule_residual,
    tau_fd,
    tau_fd_with_scale,
    tau_iter,
)
from .verifier import ORACLE_TOL, SamplePlan, default_box, verify_isoparametric, verify_r_harmonic


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float = 0.0
    details: list = field(default_factory=list)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number:2d}: {self.title} ({self.seconds:.2f} s)"


class _Run:
    """Collects sub-checks for one criterion."""

    def __init__(self, number, title):
        self.res = CriterionResult(number, title, True)
        self._t0 = time.perf_counter()

    def check(self, ok: bool, what: str):
        self.res.details.append(("ok " if ok else "BAD ") + what)
        self.res.passed &= bool(ok)

    def report(self, rep, what: str, expect: str = "pass"):
        self.check(rep.verdict == expect, f"{what}: {rep.summary()}")

    def done(self, budget: float | None = None) -> CriterionResult:
        self.res.seconds = time.perf_counter() - self._t0
        if budget is not None:
            self.check(self.res.seconds < budget, f"runtime {self.res.seconds:.2f} s < {budget:g} s")
        return self.res


def _rand_points(spec, rng, n, box=None):
    box = box or default_box(spec)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return [Point.from_coords(spec, lo + rng.random(spec.dim) * (hi - lo)) for _ in range(n)]


# ---------------------------------------------------------------- criteria


def criterion_1() -> CriterionResult:
    run = _Run(1, "Sol3 isoparametric identities")
    plan = SamplePlan(seed=1, count=200)
    inst = K.lookup("Sol3")
    for i in (1, 2):
        res = K.builtin_result("Sol3", "sol3-phi", i=i)
        rep = verify_isoparametric(inst.spec, res.pair, plan, tol=1e-9, function_id=f"sol3-phi i={i}")
        run.report(rep, f"phi_{i}")
    return run.done(budget=1.0)


def criterion_2() -> CriterionResult:
    run = _Run(2, "Sol3 arsinh ladder r = 1..4")
    spec = K.lookup("Sol3").spec
    for r in range(1, 5):
        f = K.builtin("Sol3", "sol3-arsinh", r=r)
        rep = verify_r_harmonic(spec, f, r, SamplePlan(seed=2), tol_zero=1e-6 if r == 4 else 1e-8)
        run.report(rep, f"r={r}")
    return run.done(budget=10.0)


def criterion_3() -> CriterionResult:
    run = _Run(3, "G4.1 polynomial and product examples")
    spec = K.lookup("G4.1").spec
    for r in range(1, 6):
        f = K.builtin("G4.1", "g41-poly", r=r, coefficients=(1, 0))
        run.report(verify_r_harmonic(spec, f, r, SamplePlan(seed=3), tol_zero=1e-9), f"x3^{2 * r - 1}, r={r}")
    for p, q in ((1, 2), (2, 2), (3, 2)):
        res = K.builtin_result("G4.1", "g41-product", p=p, q=q)
        rep = verify_r_harmonic(spec, res.expr, res.r, SamplePlan(seed=3), tol_zero=1e-9)
        run.report(rep, f"product (p, q) = ({p}, {q}), order {res.r}")
    return run.done()


def criterion_4() -> CriterionResult:
    run = _Run(4, "G4.4 corrected example and printed variant")
    spec = K.lookup("G4.4").spec
    tol = 1e-8
    for r in (1, 2, 3):
        res = K.builtin_result("G4.4", "g44-sep", r=r)
        rep = verify_r_harmonic(spec, res.expr, r, SamplePlan(seed=4), tol_zero=tol, flags=res.flags)
        run.report(rep, f"corrected r={r}")
        run.check(K.FLAG_G44_SIGN in rep.erratum_flags, f"erratum flag set at r={r}")
    res = K.builtin_result("G4.4", "g44-sep-printed", r=1)
    rep = verify_r_harmonic(spec, res.expr, 1, SamplePlan(seed=4), tol_zero=tol)
    run.report(rep, "printed e^(-3t) variant", expect="fail")
    run.check(rep.relative_residual >= 1e2 * tol, f"printed residual/scale {rep.relative_residual:.3e} >= {1e2 * tol:g}")
    return run.done()


def criterion_5() -> CriterionResult:
    run = _Run(5, "G4.8 family at alpha in {-1, -0.3, 0, 1}")
    for alpha in (-1.0, -0.3, 0.0, 1.0):
        spec = K.lookup("G4.8", alpha=alpha).spec
        for r in (1, 2, 3):
            f = K.builtin("G4.8", "g48-sep", r=r, params={"alpha": alpha})
            rep = verify_r_harmonic(spec, f, r, SamplePlan(seed=5), tol_zero=1e-7)
            run.report(rep, f"alpha={alpha:g} r={r}")
    return run.done()


def criterion_6() -> CriterionResult:
    run = _Run(6, "G4.9 examples and the 5 alpha^2 coefficient")
    spec0 = K.lookup("G4.9", alpha=0).spec
    for r in (1, 2, 3):
        f = K.builtin("G4.9", "g49-xpower", r=r, params={"alpha": 0})
        run.report(verify_r_harmonic(spec0, f, r, SamplePlan(seed=6), tol_zero=1e-7), f"alpha=0 x-power r={r}")
    spec1 = K.lookup("G4.9", alpha=1).spec
    for fid, r in (("g49-harmonic", 1), ("g49-biharmonic", 2)):
        res = K.builtin_result("G4.9", fid, params={"alpha": 1})
        rep = verify_r_harmonic(spec1, res.expr, r, SamplePlan(seed=6), tol_zero=1e-7, flags=res.flags)
        run.report(rep, f"alpha=1 {fid}")
        run.check(K.FLAG_G49 in rep.erratum_flags, f"{fid} carries {K.FLAG_G49}")
    phi = E.exp(-E.coord("t1")) * E.coord("x1")
    worst = 0.0
    for pt in _rand_points(spec1, np.random.default_rng(6), 10):
        ratio = tau_fd(spec1, phi, pt) / E.evaluate(phi, dict(zip(spec1.coord_names, pt.coords)))
        worst = max(worst, abs(ratio - 5))
    run.check(worst <= 1e-4, f"finite differences: max |tau_fd/phi - 5| = {worst:.2e}")
    return run.done()


def criterion_7(n_nu: int = 20, seed: int = 7) -> CriterionResult:
    run = _Run(7, "G4.10 eigenfunctions and their ladder")
    spec = K.lookup("G4.10").spec
    rng = np.random.default_rng(seed)
    pts = _rand_points(spec, rng, 5)
    worst_t = worst_k = 0.0
    for _ in range(n_nu):
        nu = rng.normal(size=2) + 1j * rng.normal(size=2)
        phi = K.builtin("G4.10", "g410-eigen", nu=tuple(nu))
        lam = nu[0] ** 2 - 2 * nu[0] + nu[1] ** 2
        mu_ = nu[0] ** 2 + nu[1] ** 2
        for pt in pts:
            v = eval_jet(phi, spec, pt, 0).value
            t1 = tau_iter(spec, phi, pt, 1).values[1]
            k = kappa(spec, phi, phi, pt)
            worst_t = max(worst_t, abs(t1 / v - lam) / max(abs(lam), 1.0))
            worst_k = max(worst_k, abs(k / v**2 - mu_) / max(abs(mu_), 1.0))
    run.check(worst_t <= 1e-9, f"tau(phi)/phi vs nu1^2 - 2 nu1 + nu2^2: max rel err {worst_t:.2e}")
    run.check(worst_k <= 1e-9, f"kappa(phi, phi)/phi^2 vs nu1^2 + nu2^2: max rel err {worst_k:.2e}")
    for nu in ((1.0, 0.5), (0.3 + 0.4j, -0.7)):
        for r in (1, 2, 3):
            f = K.builtin("G4.10", "g410-ladder", r=r, nu=nu)
            rep = verify_r_harmonic(spec, f, r, SamplePlan(seed=7), tol_zero=1e-8)
            run.report(rep, f"ladder nu={nu} r={r}")
    return run.done()


# ------------------------------------------------------- random smooth fields

_UNARY_SAFE = ("exp", "sin", "cos")


def random_field(spec, rng: np.random.Generator, depth: int = 2) -> E.FieldExpr:
    """Smooth random expression over the group's coordinates.

    Only entire functions plus ``log``/``sqrt`` of coordinates that stay
    positive on the default box are used, so every field is analytic there.
    """
    names = spec.coord_names
    xs = [names[s] for s in spec.x_slots]

    def leaf():
        kind = rng.integers(4)
        nm = names[rng.integers(len(names))]
        if kind == 0:
            return E.const(complex(rng.normal(), rng.normal() * (rng.random() < 0.3)))
        if kind == 1 and xs:
            x = E.coord(xs[rng.integers(len(xs))])
            return E.log(x) if rng.random() < 0.5 else E.sqrt(x)
        return E.const(round(float(rng.normal()), 3)) * E.coord(nm)

    def build(d):
        if d == 0:
            return leaf()
        c = rng.integers(5)
        if c == 0:
            return E.add(build(d - 1), build(d - 1))
        if c == 1:
            return E.mul(build(d - 1), build(d - 1))
        if c == 2:
            return E.pow_int(build(d - 1), int(rng.integers(2, 4)))
        op = _UNARY_SAFE[rng.integers(len(_UNARY_SAFE))]
        inner = build(d - 1)
        return getattr(E, op)(E.const(0.5) * inner)

    return E.add(build(depth), E.mul(E.coord(names[rng.integers(len(names))]), build(depth - 1)))


_HOLO = (
    lambda: E.exp(E.const(0.7) * E.coord("z")),
    lambda: E.sin(E.coord("z")),
    lambda: E.pow_int(E.coord("z"), 3),
    lambda: E.cos(E.const(0.3) * E.coord("z")) * E.coord("z"),
    lambda: E.pow_int(E.coord("z"), 2) + E.const(2) * E.coord("z"),
)

_GROUPS_8 = (("Sol3", {}), ("G4.1", {}), ("G4.4", {}), ("G4.6", {"alpha": 1, "beta": 0.5}),
             ("G4.8", {"alpha": 0.5}), ("G4.10", {}))


def criterion_8(n_pairs: int = 500, n_fields: int = 200, seed: int = 8) -> CriterionResult:
    run = _Run(8, "operator identities and jet/finite-difference agreement")
    rng = np.random.default_rng(seed)
    specs = [K.lookup(nm, **p).spec for nm, p in _GROUPS_8]
    worst_p = worst_c = 0.0
    for i in range(n_pairs):
        spec = specs[i % len(specs)]
        pt = _rand_points(spec, rng, 1)[0]
        f, g = random_field(spec, rng), random_field(spec, rng)
        res, sc = product_rule_residual(spec, f, g, pt)
        worst_p = max(worst_p, abs(res) / max(sc, 1e-300))
        fz = _HOLO[rng.integers(len(_HOLO))]()
        res, sc = chain_rule_residual(spec, fz, E.const(0.5) * random_field(spec, rng, 1), pt)
        worst_c = max(worst_c, abs(res) / max(sc, 1e-300))
    run.check(worst_p <= 1e-10, f"product rule on {n_pairs} pairs: max rel err {worst_p:.2e}")
    run.check(worst_c <= 1e-10, f"chain rule on {n_pairs} compositions: max rel err {worst_c:.2e}")
    worst = 0.0
    for i in range(n_fields):
        spec = specs[i % len(specs)]
        pt = _rand_points(spec, rng, 1)[0]
        f = random_field(spec, rng)
        jt = tau_iter(spec, f, pt, 1).values[1]
        fd = tau_fd_with_scale(spec, f, pt)
        ref = max(fd.scale, abs(jt), fd.noise / ORACLE_TOL, 1e-300)
        worst = max(worst, abs(fd.value - jt) / ref)
    run.check(worst <= 1e-5, f"jet vs finite-difference tau on {n_fields} fields over 6 groups: max rel err {worst:.2e}")
    return run.done()


def _t_field(rng) -> E.FieldExpr:
    t = E.coord("t1")
    c = rng.normal(size=3)
    return E.add(E.const(c[0]) * E.exp(E.const(c[1]) * t), E.const(c[2]) * E.pow_int(t, int(rng.integers(1, 5))))


def criterion_9(trials: int = 10, seed: int = 9) -> CriterionResult:
    run = _Run(9, "separation identity for tau^r of a product")
    rng = np.random.default_rng(seed)
    cases = (
        ("G4.1", {}, lambda: E.pow_int(E.coord("x3"), int(rng.integers(2, 7))) + E.exp(E.const(rng.normal()) * E.coord("x3"))),
        ("G4.8", {"alpha": 0}, lambda: E.sin(E.const(rng.normal()) * E.coord("x2")) + E.pow_int(E.coord("x2"), int(rng.integers(2, 6)))),
    )
    for name, params, psi_gen in cases:
        spec = K.lookup(name, **params).spec
        worst = 0.0
        for _ in range(trials):
            phi, psi = _t_field(rng), psi_gen()
            pt = _rand_points(spec, rng, 1)[0]
            tp = tau_iter(spec, phi, pt, 3).values
            tq = tau_iter(spec, psi, pt, 3).values
            direct = tau_iter(spec, phi * psi, pt, 3).values
            for r in (1, 2, 3):
                terms = [math.comb(r, a) * tp[a] * tq[r - a] for a in range(r + 1)]
                sc = max(max(abs(x) for x in terms), abs(direct[r]), 1e-300)
                worst = max(worst, abs(direct[r] - sum(terms)) / sc)
        run.check(worst <= 1e-8, f"{spec.label()}: max rel err {worst:.2e} over r <= 3")
    return run.done()


def criterion_10(n: int = 20) -> CriterionResult:
    run = _Run(10, "random commuting families, eigenvector construction")
    for seed in range(n):
        kind = "abelian" if seed % 2 == 0 else "heisenberg"
        m = 1 + seed % 4 // 2
        size = (2, 3, 4)[seed // 2 % 3] if kind == "abelian" else (2, 4)[seed // 2 % 2]
        fam = make_test_family(seed, m, size, kind)
        spec = build_spec(kind, m, size if kind == "abelian" else size // 2, fam, name=f"{kind}-{seed}")
        worst_fail = None
        pairs = common_eigenvectors(fam)
        for ep in pairs:
            pair = isoparametric_from_eigenvector(spec, ep)
            rep = verify_isoparametric(spec, pair, SamplePlan(seed=seed, count=60), tol=1e-8)
            if not rep.passed:
                worst_fail = rep
        run.check(bool(pairs) and worst_fail is None,
                  f"seed {seed} ({kind}, m={m}, size={size}): {len(pairs)} eigenvectors"
                  + (f"; {worst_fail.summary()}" if worst_fail else ""))
    return run.done()


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_all(which=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for k in which or sorted(CRITERIA):
        res = CRITERIA[k]()
        out.append(res)
        if echo:
            echo(res.line())
    return out
