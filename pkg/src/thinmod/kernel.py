"""Dense linear algebra over the rationals or in double precision.

Every routine takes an :class:`Arith` context.  In exact mode matrices are
numpy object arrays holding :class:`fractions.Fraction` entries and every
comparison is an equality test.  In float mode matrices are ``float64``
arrays and comparisons use the relative tolerance ``eps``.

Exact subspaces carry an orthogonal (not normalized) basis, since unit
vectors are generally irrational.  Float subspaces carry an orthonormal
basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

DEFAULT_EPS = 1e-9

# largest denominator accepted when a float eigenvalue is promoted to a
# rational candidate; candidates are always verified exactly afterwards
_RATIONAL_BOUND = 10**6


class ContractError(ValueError):
    """An input violates the documented precondition of a kernel routine."""


class IrrationalSpectrum(ArithmeticError):
    """Exact mode met an eigenvalue that is not rational."""


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip().replace("−", "-"))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ContractError(f"non-finite value {x!r}")
        return Fraction(float(x))
    raise ContractError(f"cannot read {x!r} as a rational number")


@dataclass(frozen=True)
class Arith:
    """Arithmetic mode plus the comparison tolerance used in float mode."""

    exact: bool = True
    eps: float = DEFAULT_EPS

    @property
    def mode(self) -> str:
        return "exact" if self.exact else "float"

    def scalar(self, x):
        if self.exact:
            return to_fraction(x)
        if isinstance(x, str):
            return float(to_fraction(x))
        return float(x)

    def array(self, data) -> np.ndarray:
        a = np.array(data, dtype=object)
        flat = [self.scalar(x) for x in a.ravel()]
        if self.exact:
            out = np.empty(a.shape, dtype=object)
            out.ravel()[:] = flat
            return out
        return np.array(flat, dtype=float).reshape(a.shape)

    def zeros(self, shape) -> np.ndarray:
        if self.exact:
            out = np.empty(shape, dtype=object)
            out.fill(Fraction(0))
            return out
        return np.zeros(shape)

    def eye(self, n: int) -> np.ndarray:
        out = self.zeros((n, n))
        for i in range(n):
            out[i, i] = self.scalar(1)
        return out

    def is_zero(self, x, scale=1.0) -> bool:
        if self.exact:
            return x == 0
        return abs(x) <= self.eps * max(1.0, abs(float(scale)))

    def nonzero(self, x, scale=1.0) -> bool:
        return not self.is_zero(x, scale)

    def same(self, a, b, scale=None) -> bool:
        if scale is None:
            scale = max(abs(a), abs(b))
        return self.is_zero(a - b, scale)

    def all_zero(self, M, scale=1.0) -> bool:
        M = np.asarray(M)
        if M.size == 0:
            return True
        if self.exact:
            return all(x == 0 for x in M.ravel())
        return float(np.max(np.abs(M))) <= self.eps * max(1.0, abs(float(scale)))

    def deviation(self, a, b) -> float:
        """Absolute difference as a float, for residual reports."""
        return abs(float(a - b))


FLOAT = Arith(exact=False)
EXACT = Arith(exact=True)


def as_float(M) -> np.ndarray:
    return np.asarray(M, dtype=object).astype(float) if np.asarray(M).dtype == object \
        else np.asarray(M, dtype=float)


def max_abs(M) -> float:
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(as_float(M))))


def _common_denominator(M: np.ndarray) -> int:
    dens = {x.denominator for x in M.ravel() if isinstance(x, Fraction)}
    return math.lcm(*dens) if dens else 1


def _integer_form(M: np.ndarray) -> tuple[np.ndarray, int]:
    den = _common_denominator(M)
    out = np.empty(M.shape, dtype=object)
    out.ravel()[:] = [int(x * den) for x in M.ravel()]
    return out, den


def matmul(X, Y) -> np.ndarray:
    """Matrix product.  Exact operands are scaled to integers first."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.dtype != object and Y.dtype != object:
        return X @ Y
    if X.dtype != object:
        X = X.astype(object)
    if Y.dtype != object:
        Y = Y.astype(object)
    Xi, dx = _integer_form(X)
    Yi, dy = _integer_form(Y)
    bound = (max((abs(v) for v in Xi.ravel()), default=0)
             * max((abs(v) for v in Yi.ravel()), default=0)
             * max(1, X.shape[-1]))
    if bound < 2**62:
        P = (Xi.astype(np.int64) @ Yi.astype(np.int64)).astype(object)
    else:
        P = Xi @ Yi
    den = dx * dy
    out = np.empty(P.shape, dtype=object)
    out.ravel()[:] = [Fraction(int(v), den) for v in P.ravel()]
    return out


def dot(u, v):
    return matmul(np.asarray(u).reshape(1, -1), np.asarray(v).reshape(-1, 1))[0, 0]


def is_symmetric(M, arith: Arith) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return arith.all_zero(M - M.T, max_abs(M))


# ---------------------------------------------------------------------------
# elimination


def _rref_exact(M: np.ndarray) -> tuple[list[list[Fraction]], list[int]]:
    rows = [[to_fraction(x) for x in row] for row in np.asarray(M, dtype=object)]
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows, pivots


def _float_rank_tol(s: np.ndarray, arith: Arith, shape) -> float:
    smax = float(s[0]) if s.size else 0.0
    return arith.eps * max(1.0, smax)


def rank(M, arith: Arith) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    if arith.exact:
        return len(_rref_exact(M)[1])
    s = np.linalg.svd(as_float(M), compute_uv=False)
    return int(np.sum(s > _float_rank_tol(s, arith, M.shape)))


def nullspace(M, arith: Arith) -> np.ndarray:
    """Columns spanning {x : M x = 0}."""
    M = np.asarray(M)
    ncols = M.shape[1]
    if arith.exact:
        rows, pivots = _rref_exact(M) if M.shape[0] else ([], [])
        free = [c for c in range(ncols) if c not in pivots]
        basis = arith.zeros((ncols, len(free)))
        for k, f in enumerate(free):
            basis[f, k] = Fraction(1)
            for r, p in enumerate(pivots):
                basis[p, k] = -rows[r][f]
        return basis
    if M.shape[0] == 0:
        return np.eye(ncols)
    _, s, vt = np.linalg.svd(as_float(M))
    rk = int(np.sum(s > _float_rank_tol(s, arith, M.shape)))
    return vt[rk:].T.copy()


def solve(M, B, arith: Arith) -> np.ndarray:
    """Solve the square nonsingular system M X = B."""
    M = np.asarray(M)
    B = np.asarray(B)
    vec = B.ndim == 1
    if vec:
        B = B.reshape(-1, 1)
    n = M.shape[0]
    if M.shape != (n, n) or B.shape[0] != n:
        raise ContractError("dimension mismatch in solve")
    if arith.exact:
        aug = np.hstack([np.asarray(M, dtype=object), np.asarray(B, dtype=object)])
        rows, pivots = _rref_exact(aug)
        if pivots[:n] != list(range(n)):
            raise ContractError("singular system")
        X = arith.array([row[n:] for row in rows[:n]])
    else:
        X = np.linalg.solve(as_float(M), as_float(B))
    return X.ravel() if vec else X


def inverse(M, arith: Arith) -> np.ndarray:
    return solve(M, arith.eye(np.asarray(M).shape[0]), arith)


# ---------------------------------------------------------------------------
# subspaces


def _gram_schmidt_exact(cols: Sequence[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    norms: list[Fraction] = []
    for v in cols:
        w = np.array(v, dtype=object)
        for b, nb in zip(out, norms):
            w = w - b * (dot(b, w) / nb)
        nw = dot(w, w)
        if nw != 0:
            out.append(w)
            norms.append(nw)
    return out


@dataclass(frozen=True)
class Subspace:
    """A subspace of R^n (or Q^n) given by a basis stored as columns."""

    basis: np.ndarray
    arith: Arith

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        B = self.basis
        if self.dim == 0:
            return self.arith.zeros((self.ambient, self.ambient))
        if not self.arith.exact:
            return B @ B.T
        P = self.arith.zeros((self.ambient, self.ambient))
        for k in range(self.dim):
            b = B[:, k]
            P = P + np.outer(b, b) / dot(b, b)
        return P

    def project(self, v) -> np.ndarray:
        v = np.asarray(v)
        if self.dim == 0:
            return self.arith.zeros(v.shape)
        if not self.arith.exact:
            return self.basis @ (self.basis.T @ v)
        out = self.arith.zeros(v.shape)
        for k in range(self.dim):
            b = self.basis[:, k]
            out = out + b * (dot(b, v) / dot(b, b))
        return out

    def contains(self, v) -> bool:
        v = np.asarray(v)
        return self.arith.all_zero(v - self.project(v), max_abs(v))

    def contains_space(self, other: "Subspace") -> bool:
        return all(self.contains(other.basis[:, k]) for k in range(other.dim))


def span(vectors, arith: Arith, ambient: int | None = None) -> Subspace:
    """Subspace spanned by the columns of ``vectors`` (or a list of vectors)."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        cols = [vectors[:, k] for k in range(vectors.shape[1])]
        ambient = vectors.shape[0]
    else:
        cols = [np.asarray(v) for v in vectors]
        if cols:
            ambient = cols[0].shape[0]
    if ambient is None:
        raise ContractError("ambient dimension unknown for an empty span")
    if not cols:
        return Subspace(arith.zeros((ambient, 0)), arith)
    if arith.exact:
        kept = _gram_schmidt_exact(cols)
        B = arith.zeros((ambient, len(kept)))
        for k, w in enumerate(kept):
            B[:, k] = w
        return Subspace(B, arith)
    M = np.column_stack([as_float(c) for c in cols])
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    rk = int(np.sum(s > _float_rank_tol(s, arith, M.shape)))
    return Subspace(U[:, :rk].copy(), arith)


def intersect(S1: Subspace, S2: Subspace) -> Subspace:
    """Intersection of two subspaces of the same ambient space."""
    if S1.ambient != S2.ambient:
        raise ContractError("subspaces live in different ambient spaces")
    arith = S1.arith
    if S1.dim == 0 or S2.dim == 0:
        return Subspace(arith.zeros((S1.ambient, 0)), arith)
    M = np.hstack([S1.basis, -S2.basis])
    K = nullspace(M, arith)
    if K.shape[1] == 0:
        return Subspace(arith.zeros((S1.ambient, 0)), arith)
    V = matmul(S1.basis, K[: S1.dim, :])
    return span(V, arith)


def sum_spaces(spaces: Iterable[Subspace], arith: Arith, ambient: int) -> Subspace:
    cols = [S.basis[:, k] for S in spaces for k in range(S.dim)]
    return span(cols, arith, ambient=ambient)


# ---------------------------------------------------------------------------
# spectra


def _cluster(values: Sequence[float], eps: float) -> list[list[int]]:
    """Group indices of descending ``values`` whose gaps are within tolerance."""
    groups: list[list[int]] = []
    for k, lam in enumerate(values):
        if groups and abs(values[groups[-1][-1]] - lam) <= eps * max(1.0, abs(lam)):
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def eig_sym(M, arith: Arith) -> list[tuple[object, Subspace]]:
    """Eigenvalues (descending) and eigenspaces of a symmetric matrix.

    Exact mode promotes each float eigenvalue cluster to a rational
    candidate and proves it by an exact kernel computation; the eigenspace
    dimensions must add up to the size of the matrix.  When they do not,
    some eigenvalue is irrational and :class:`IrrationalSpectrum` is raised.
    """
    M = np.asarray(M)
    if not is_symmetric(M, arith):
        raise ContractError("eig_sym needs a symmetric matrix")
    n = M.shape[0]
    w, V = np.linalg.eigh(as_float(M))
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    groups = _cluster(list(w), max(arith.eps, 1e-9))
    out: list[tuple[object, Subspace]] = []
    if not arith.exact:
        for g in groups:
            lam = float(np.mean(w[g]))
            out.append((lam, Subspace(V[:, g].copy(), arith)))
        return out
    total = 0
    for g in groups:
        lam = Fraction(float(np.mean(w[g]))).limit_denominator(_RATIONAL_BOUND)
        K = nullspace(M - lam * arith.eye(n), arith)
        if K.shape[1] != len(g):
            raise IrrationalSpectrum(f"eigenvalue near {float(lam)!r} is not rational")
        total += K.shape[1]
        out.append((lam, span(K, arith)))
    if total != n:
        raise IrrationalSpectrum("rational eigenspaces do not fill the space")
    return out


def matrix_poly_eval(coeffs: Sequence, M, arith: Arith) -> np.ndarray:
    """Evaluate sum_k coeffs[k] M^k by Horner's rule."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError("matrix_poly_eval needs a square matrix")
    n = M.shape[0]
    I = arith.eye(n)
    if len(coeffs) == 0:
        return arith.zeros((n, n))
    R = I * arith.scalar(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        R = matmul(R, M) + I * arith.scalar(c)
    return R


def orbit_span(v, generators: Sequence[np.ndarray], arith: Arith, limit: int | None = None) -> Subspace:
    """Smallest subspace containing ``v`` and closed under the generators."""
    v = np.asarray(v)
    S = span([v], arith)
    frontier = [v]
    limit = limit or v.shape[0]
    while frontier and S.dim < limit:
        new = []
        for w in frontier:
            for G in generators:
                x = matmul(G, w.reshape(-1, 1)).ravel()
                if not S.contains(x):
                    S = span([S.basis[:, k] for k in range(S.dim)] + [x], arith)
                    new.append(x)
        frontier = new
    return S


def rationalize(M, bound: int = _RATIONAL_BOUND) -> np.ndarray:
    """Nearest rationals with bounded denominators (a guess to be verified)."""
    M = np.asarray(M, dtype=float)
    out = np.empty(M.shape, dtype=object)
    out.ravel()[:] = [Fraction(float(x)).limit_denominator(bound) for x in M.ravel()]
    return out


def sign_normalize(v) -> np.ndarray:
    """Flip ``v`` so its first coordinate of largest magnitude is positive."""
    v = np.asarray(v)
    mags = [abs(float(x)) for x in v]
    top = max(mags)
    k = next(i for i, m in enumerate(mags) if m >= top * (1 - 1e-12))
    return -v if v[k] < 0 else v
