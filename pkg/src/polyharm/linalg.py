"""Matrix exponentials (plain and jet-valued) and commuting-family utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ArgumentError, NumericalError, ValidationError
from .jets import Jet, _mul_batch, _table, num_coeffs

__all__ = [
    "EigenPair",
    "CommutationCheck",
    "mat_exp",
    "mat_exp_jet",
    "check_commuting",
    "common_eigenvectors",
    "adjugate_2x2",
    "make_test_family",
    "heisenberg_J",
]

_MAX_TERMS = 40


def _square(M, what="matrix") -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ArgumentError(f"{what} must be square, got shape {M.shape}")
    return M


def mat_exp(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a truncated Taylor core."""
    M = _square(M)
    M = M.astype(complex if np.iscomplexobj(M) else float)
    n = M.shape[0]
    nrm = np.linalg.norm(M)
    s = max(0, math.ceil(math.log2(nrm / 0.25))) if nrm > 0 else 0
    X = M / 2.0**s
    E = np.eye(n, dtype=M.dtype)
    term = np.eye(n, dtype=M.dtype)
    for k in range(1, _MAX_TERMS):
        term = term @ X / k
        E = E + term
        if np.linalg.norm(term) <= 1e-18 * np.linalg.norm(E):
            break
    for _ in range(s):
        E = E @ E
    return E


def _jet_matmul(A: np.ndarray, B: np.ndarray, tab) -> np.ndarray:
    # A, B: (n, n, N) -> (n, n, N)
    return _mul_batch(A[:, :, None, :], B[None, :, :, :], tab).sum(axis=1)


def mat_exp_jet(M: Sequence[Sequence[Jet]], order: int | None = None) -> list[list[Jet]]:
    """Exponential of a matrix whose entries are jets, by scaling and squaring.

    The scaling uses an upper bound of the Frobenius norm built from the l1 norm
    of each entry's coefficients, which is submultiplicative for jets.
    """
    rows = [list(r) for r in M]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ArgumentError("jet matrix must be square and non-empty")
    dim, K = rows[0][0].dim, rows[0][0].order
    if order is not None and order != K:
        raise ArgumentError(f"entries have order {K}, requested order {order}")
    for r in rows:
        for e in r:
            if e.dim != dim or e.order != K:
                raise ArgumentError("all jet entries must share dim and order")
    tab = _table(dim, K)
    A = np.array([[e.coeffs for e in r] for r in rows], dtype=complex)
    nrm = math.sqrt(float(np.sum(np.sum(np.abs(A), axis=2) ** 2)))
    s = max(0, math.ceil(math.log2(nrm / 0.25))) if nrm > 0 else 0
    X = A / 2.0**s
    N = num_coeffs(dim, K)
    eye = np.zeros((n, n, N), dtype=complex)
    eye[np.arange(n), np.arange(n), 0] = 1.0
    E = eye.copy()
    term = eye
    for k in range(1, _MAX_TERMS):
        term = _jet_matmul(term, X, tab) / k
        E = E + term
        if np.abs(term).sum() <= 1e-18 * np.abs(E).sum():
            break
    for _ in range(s):
        E = _jet_matmul(E, E, tab)
    return [[Jet(dim, K, E[i, j]) for j in range(n)] for i in range(n)]


class CommutationCheck(NamedTuple):
    commuting: bool
    deviation: float
    pair: tuple[int, int] | None


def check_commuting(family: Sequence, tol: float = 1e-10) -> CommutationCheck:
    """Largest Frobenius commutator norm over all pairs, relative to ``max ||A||^2``."""
    mats = [_square(np.asarray(A, dtype=float), "family member") for A in family]
    if len({A.shape for A in mats}) > 1:
        raise ArgumentError("family members must share one square size")
    scale = max((np.linalg.norm(A) for A in mats), default=0.0) ** 2
    worst, pair = 0.0, None
    for k in range(len(mats)):
        for l in range(k + 1, len(mats)):
            d = float(np.linalg.norm(mats[k] @ mats[l] - mats[l] @ mats[k]))
            if d > worst:
                worst, pair = d, (k, l)
    return CommutationCheck(worst <= tol * max(scale, 1e-300), worst, pair)


@dataclass(frozen=True)
class EigenPair:
    """Common eigenvector ``v`` of the transposed family with eigenvalues ``lam``."""

    v: np.ndarray
    lam: np.ndarray
    residual: float

    @classmethod
    def from_vector(cls, family: Sequence, v) -> "EigenPair":
        """Eigenvalues by Rayleigh quotients; keeps the scaling of ``v``."""
        v = np.asarray(v, dtype=complex)
        vv = np.vdot(v, v).real
        if vv == 0:
            raise ArgumentError("zero vector is not an eigenvector")
        lam, res = [], 0.0
        for A in family:
            w = np.asarray(A, dtype=float).T @ v
            l = np.vdot(v, w) / vv
            lam.append(l)
            res = max(res, float(np.linalg.norm(w - l * v) / math.sqrt(vv)))
        return cls(v, np.array(lam, dtype=complex), res)


def _normalize_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    mags = np.abs(v)
    i = int(np.nonzero(mags >= 0.5 * mags.max())[0][0])
    return v * (abs(v[i]) / v[i])


def _cluster(values: np.ndarray, tol: float) -> list[np.ndarray]:
    groups: list[list[int]] = []
    for i, z in enumerate(values):
        for g in groups:
            if abs(values[g[0]] - z) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return [np.array(g) for g in groups]


def common_eigenvectors(family: Sequence, seed: int = 0, tol: float = 1e-8) -> list[EigenPair]:
    """All distinct common eigendirections of the transposed family.

    A random real combination ``C = sum c_k A_k^T`` is diagonalised; each
    eigenvalue cluster (defective members split eigenvalues at the
    ``eps**(1/p)`` level) is collapsed to its mean, the null space of
    ``C - mean`` is extracted by SVD, and every candidate is verified against
    each member separately.
    """
    mats = [_square(np.asarray(A, dtype=float), "family member") for A in family]
    if not mats:
        raise ArgumentError("empty family")
    chk = check_commuting(mats)
    if not chk.commuting:
        raise ValidationError(
            f"family does not commute: members {chk.pair} deviate by {chk.deviation:.3e}"
        )
    scale = max(np.linalg.norm(A) for A in mats)
    rng = np.random.default_rng(seed)
    n = mats[0].shape[0]
    for _attempt in range(5):
        c = rng.uniform(0.5, 1.5, size=len(mats)) * rng.choice([-1.0, 1.0], size=len(mats))
        C = sum(ck * A.T for ck, A in zip(c, mats))
        cnorm = max(np.linalg.norm(C), 1.0)
        w = np.linalg.eigvals(C)
        candidates = []
        for g in _cluster(w, 1e-3 * cnorm):
            mean = w[g].mean()
            _, sv, vh = np.linalg.svd(C - mean * np.eye(n))
            null = vh[sv <= 1e-8 * cnorm].conj()
            if len(null) == 0:
                _, vecs = np.linalg.eig(C)
                null = vecs[:, g].T
            candidates.extend(null)
        pairs: list[EigenPair] = []
        for v in candidates:
            v = _normalize_phase(v)
            p = EigenPair.from_vector(mats, v)
            if p.residual > tol * max(scale, 1.0):
                continue
            if any(abs(np.vdot(q.v, p.v)) > 1 - 1e-6 for q in pairs):
                continue
            pairs.append(p)
        if pairs:
            return pairs
    raise NumericalError(
        "no common eigenvector passed verification after 5 random combinations; "
        "supply the eigenvector explicitly"
    )


def adjugate_2x2(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ArgumentError(f"adjugate_2x2 needs a 2x2 matrix, got {M.shape}")
    (a, b), (c, d) = M
    return np.array([[d, -b], [-c, a]])


def heisenberg_J(n: int) -> np.ndarray:
    """Block-diagonal standard complex structure, ``J x = (-x2, x1, ...)``."""
    if n < 1:
        raise ArgumentError("n must be >= 1")
    return np.kron(np.eye(n), np.array([[0.0, -1.0], [1.0, 0.0]]))


def make_test_family(seed: int, m: int, size: int, kind: str = "abelian") -> list[np.ndarray]:
    """``m`` exactly commuting matrices, all polynomials of one random matrix ``R``.

    With ``kind="heisenberg"`` (``size`` even) ``R`` is Hamiltonian for
    ``heisenberg_J`` and only odd powers plus a multiple of the identity are
    used, so every member has the admissible Heisenberg block form.
    """
    if m < 1:
        raise ArgumentError("m must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "abelian":
        R = rng.normal(size=(size, size)) / math.sqrt(size)
        powers = [np.eye(size), R, R @ R]
    elif kind == "heisenberg":
        if size % 2:
            raise ArgumentError("Heisenberg families need an even size")
        S = rng.normal(size=(size, size))
        S = (S + S.T) / (2 * math.sqrt(size))
        R = np.linalg.solve(heisenberg_J(size // 2), S)
        powers = [np.eye(size), R, R @ R @ R]
    else:
        raise ArgumentError(f"unknown family kind {kind!r}")
    family = []
    for _ in range(m):
        c = rng.uniform(-1.0, 1.0, size=3)
        c[2] *= 0.3
        family.append(sum(ci * P for ci, P in zip(c, powers)))
    return family
