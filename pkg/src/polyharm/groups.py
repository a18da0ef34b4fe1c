"""Semidirect products R^m x_A R^n and R^m x_A H^{2n+1}.

A :class:`GroupSpec` is fully determined by its target kind and the commuting
family ``A = (A_1, ..., A_m)``; ``mu(t) = Exp(sum_k A_k t_k)``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ValidationError
from .linalg import adjugate_2x2, check_commuting, heisenberg_J, mat_exp

__all__ = [
    "Target",
    "GroupSpec",
    "Point",
    "build_spec",
    "heisenberg_J",
    "a_scalar",
    "mu",
    "metric_matrix",
    "spec_to_dict",
    "spec_from_dict",
    "load_spec",
    "dump_spec",
]

COMMUTE_TOL = 1e-10
BLOCK_TOL = 1e-10


class Target(str, enum.Enum):
    ABELIAN = "abelian"
    HEISENBERG = "heisenberg"


@dataclass(frozen=True)
class GroupSpec:
    kind: Target
    m: int
    n: int
    matrices: tuple  # m nested tuples (row-major), hashable
    omega: tuple
    name: str = field(default="", compare=False)

    @property
    def family(self) -> list[np.ndarray]:
        return [np.array(A, dtype=float) for A in self.matrices]

    @property
    def heisenberg(self) -> bool:
        return self.kind is Target.HEISENBERG

    @property
    def x_size(self) -> int:
        """Length of the x block: n (abelian) or 2n (Heisenberg)."""
        return 2 * self.n if self.heisenberg else self.n

    @property
    def dim(self) -> int:
        return self.m + self.x_size + (1 if self.heisenberg else 0)

    @property
    def coord_names(self) -> list[str]:
        names = [f"t{k + 1}" for k in range(self.m)]
        if self.heisenberg:
            names.append("xi")
        return names + [f"x{i + 1}" for i in range(self.x_size)]

    @property
    def t_slots(self) -> list[int]:
        return list(range(self.m))

    @property
    def xi_slot(self) -> int | None:
        return self.m if self.heisenberg else None

    @property
    def x_slots(self) -> list[int]:
        start = self.m + (1 if self.heisenberg else 0)
        return list(range(start, start + self.x_size))

    @property
    def traces(self) -> np.ndarray:
        return np.array([np.trace(A) for A in self.family])

    def label(self) -> str:
        return self.name or f"{self.kind.value}(m={self.m}, n={self.n})"


@dataclass(frozen=True)
class Point:
    t: tuple
    xi: float | None
    x: tuple

    @property
    def coords(self) -> tuple:
        return tuple(self.t) + ((self.xi,) if self.xi is not None else ()) + tuple(self.x)

    @classmethod
    def from_coords(cls, spec: GroupSpec, values: Sequence[float]) -> "Point":
        values = [float(v) for v in values]
        if len(values) != spec.dim:
            raise ArgumentError(
                f"point needs {spec.dim} coordinates {spec.coord_names}, got {len(values)}"
            )
        t = tuple(values[: spec.m])
        xi = values[spec.m] if spec.heisenberg else None
        return cls(t, xi, tuple(values[spec.m + (1 if spec.heisenberg else 0):]))

    def check(self, spec: GroupSpec) -> "Point":
        if len(self.t) != spec.m or len(self.x) != spec.x_size or (self.xi is None) == spec.heisenberg:
            raise ArgumentError(f"point {self} does not match {spec.label()}")
        return self


def _block_deviation(A: np.ndarray, n: int):
    """Worst violation of the admissible Heisenberg block form, with the offending block."""
    blk = lambda i, j: A[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
    worst, where = 0.0, None
    a0 = np.trace(blk(0, 0))
    for i in range(n):
        d = abs(np.trace(blk(i, i)) - a0)
        if d > worst:
            worst, where = d, (i + 1, i + 1)
        for j in range(i + 1, n):
            d = float(np.linalg.norm(blk(i, j) + adjugate_2x2(blk(j, i))))
            if d > worst:
                worst, where = d, (i + 1, j + 1)
    return worst, where


def build_spec(kind, m: int, n: int, family: Sequence, name: str = "") -> GroupSpec:
    """Validate a commuting family and build the group specification."""
    kind = Target(kind)
    if m < 1:
        raise ArgumentError("m must be >= 1: every construction needs a t-coordinate")
    if n < 1:
        raise ArgumentError("n must be >= 1")
    mats = [np.asarray(A, dtype=float) for A in family]
    if len(mats) != m:
        raise ArgumentError(f"expected {m} matrices, got {len(mats)}")
    size = 2 * n if kind is Target.HEISENBERG else n
    for k, A in enumerate(mats):
        if A.shape != (size, size):
            raise ArgumentError(f"matrix {k + 1} has shape {A.shape}, expected ({size}, {size})")
        if not np.all(np.isfinite(A)):
            raise ValidationError(f"matrix {k + 1} has non-finite entries")
    chk = check_commuting(mats, COMMUTE_TOL)
    if not chk.commuting:
        k, l = chk.pair
        raise ValidationError(
            f"family does not commute: A_{k + 1} A_{l + 1} - A_{l + 1} A_{k + 1} has norm "
            f"{chk.deviation:.3e}"
        )
    if kind is Target.HEISENBERG:
        for k, A in enumerate(mats):
            dev, where = _block_deviation(A, n)
            if dev > BLOCK_TOL * max(np.linalg.norm(A), 1.0):
                raise ValidationError(
                    f"A_{k + 1} is not of admissible Heisenberg block form: block {where} "
                    f"deviates by {dev:.3e}"
                )
    tr = np.array([np.trace(A) for A in mats])
    omega = tr * ((n + 1) / n) if kind is Target.HEISENBERG else tr
    return GroupSpec(
        kind,
        m,
        n,
        tuple(tuple(tuple(float(v) for v in row) for row in A) for A in mats),
        tuple(float(w) for w in omega),
        name,
    )


def mu(spec: GroupSpec, t: Sequence[float]) -> np.ndarray:
    """``mu(t) = Exp(sum_k A_k t_k)``."""
    return mat_exp(sum(tk * A for tk, A in zip(t, spec.family)))


def a_scalar(spec: GroupSpec, t: Sequence[float]) -> float:
    """``a(t) = exp((1/n) sum_k trace(A_k) t_k)``; Heisenberg targets only."""
    if not spec.heisenberg:
        raise ArgumentError("a(t) is defined for Heisenberg targets only")
    return math.exp(float(np.dot(spec.traces, t)) / spec.n)


def metric_matrix(spec: GroupSpec, point: Point, form: str = "factorized") -> np.ndarray:
    """Left-invariant metric in the coordinates (t, x) or (t, xi, x)."""
    point.check(spec)
    m = spec.m
    mneg = mu(spec, [-v for v in point.t])
    xx = mneg.T @ mneg
    if not spec.heisenberg:
        g = np.eye(spec.dim)
        g[m:, m:] = xx
        return g
    N = spec.x_size
    Jx = heisenberg_J(spec.n) @ np.array(point.x)
    a2 = a_scalar(spec, [-v for v in point.t]) ** 2
    if form == "factorized":
        L = np.eye(spec.dim)
        L[m + 1 :, m] = -0.5 * Jx
        D = np.eye(spec.dim)
        D[m, m] = a2
        D[m + 1 :, m + 1 :] = xx
        return L @ D @ L.T
    if form == "expanded":
        g = np.zeros((spec.dim, spec.dim))
        g[:m, :m] = np.eye(m)
        g[m + 1 :, m + 1 :] = xx
        h = np.zeros((N + 1, N + 1))
        h[0, 0] = 1.0
        h[0, 1:] = -0.5 * Jx
        h[1:, 0] = -0.5 * Jx
        h[1:, 1:] = 0.25 * np.outer(Jx, Jx)
        g[m:, m:] += a2 * h
        return g
    raise ArgumentError(f"unknown metric form {form!r}")


# ----------------------------------------------------------------- file format


def spec_to_dict(spec: GroupSpec) -> dict:
    return {
        "kind": spec.kind.value,
        "m": spec.m,
        "n": spec.n,
        "matrices": [[list(row) for row in A] for A in spec.matrices],
    }


def spec_from_dict(data: dict, name: str = "") -> GroupSpec:
    """Parse a group-spec object; matrices may be nested rows or flat row-major arrays."""
    if not isinstance(data, dict):
        raise ValidationError("group spec must be a JSON object")
    unknown = set(data) - {"kind", "m", "n", "matrices", "name"}
    if unknown:
        raise ValidationError(f"unknown group-spec fields: {sorted(unknown)}")
    try:
        kind = Target(data["kind"])
        m, n = data["m"], data["n"]
        raw = data["matrices"]
    except KeyError as exc:
        raise ValidationError(f"group spec is missing field {exc}") from None
    except ValueError:
        raise ValidationError(f"kind must be 'abelian' or 'heisenberg', got {data['kind']!r}") from None
    if not (isinstance(m, int) and isinstance(n, int)):
        raise ValidationError("m and n must be integers")
    size = 2 * n if kind is Target.HEISENBERG else n
    mats = []
    for k, A in enumerate(raw):
        arr = np.asarray(A, dtype=float)
        if arr.ndim == 1:
            if arr.size != size * size:
                raise ValidationError(f"matrix {k + 1}: expected {size * size} entries, got {arr.size}")
            arr = arr.reshape(size, size)
        if arr.shape != (size, size):
            raise ValidationError(f"matrix {k + 1}: expected shape ({size}, {size}), got {arr.shape}")
        mats.append(arr)
    return build_spec(kind, m, n, mats, name=name or data.get("name", ""))


def load_spec(path) -> GroupSpec:
    p = Path(path)
    return spec_from_dict(json.loads(p.read_text()), name=f"file:{p.name}")


def dump_spec(spec: GroupSpec, path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n")
