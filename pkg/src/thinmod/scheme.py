"""Eigenvalues, primitive idempotents and Krein parameters of the scheme."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .graphs import DistanceData, IntersectionNumbers
from .kernel import Arith, Subspace, eig_sym, matmul, max_abs


class SpectrumError(ValueError):
    """The spectral data contradicts a structural identity."""


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues ``theta`` with idempotents ``E`` and multiplicities ``m``.

    ``spaces`` holds the eigenspaces with the bases produced by the kernel;
    ``A`` is the adjacency matrix in the arithmetic of ``arith``.
    """

    theta: tuple
    E: tuple[np.ndarray, ...]
    m: tuple[int, ...]
    spaces: tuple[Subspace, ...]
    A: np.ndarray
    arith: Arith

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def diameter(self) -> int:
        return len(self.theta) - 1

    def reordered(self, ordering) -> "SpectralData":
        ordering = tuple(ordering)
        return SpectralData(
            tuple(self.theta[i] for i in ordering),
            tuple(self.E[i] for i in ordering),
            tuple(self.m[i] for i in ordering),
            tuple(self.spaces[i] for i in ordering),
            self.A,
            self.arith,
        )


def _product_formula(A, theta, i, arith: Arith) -> np.ndarray:
    n = A.shape[0]
    I = arith.eye(n)
    out = I
    for j, th in enumerate(theta):
        if j != i:
            out = matmul(out, A - th * I) * (1 / (theta[i] - th))
    return out


def primitive_idempotents(dd: DistanceData, inn: IntersectionNumbers, arith: Arith) -> SpectralData:
    """Spectral decomposition of the adjacency matrix, in descending order.

    The idempotents are built twice, from eigenspaces and from the
    Lagrange product over the other eigenvalues, and must agree.
    """
    A = arith.array(dd.adjacency)
    n = A.shape[0]
    D = dd.diameter
    spec = eig_sym(A, arith)
    if len(spec) != D + 1:
        raise SpectrumError(f"{len(spec)} distinct eigenvalues, expected D+1 = {D + 1}")
    theta = tuple(lam for lam, _ in spec)
    spaces = tuple(S for _, S in spec)
    E = []
    for i, S in enumerate(spaces):
        P = S.projector()
        Q = _product_formula(A, theta, i, arith)
        if not arith.all_zero(P - Q, 1.0):
            raise SpectrumError(f"idempotent {i}: eigenspace and product forms disagree")
        E.append(P)
    m = tuple(S.dim for S in spaces)
    sd = SpectralData(theta, tuple(E), m, spaces, A, arith)
    _check_spectral(sd)
    return sd


def _check_spectral(sd: SpectralData) -> None:
    arith, A, n = sd.arith, sd.A, sd.n
    E0 = sd.E[0]
    target = arith.scalar(1) / n if arith.exact else 1.0 / n
    if not arith.all_zero(E0 - target, 1.0):
        raise SpectrumError("E_0 is not J/|X|")
    if not arith.all_zero(sum(sd.E) - arith.eye(n), 1.0):
        raise SpectrumError("idempotents do not sum to I")
    for i, Ei in enumerate(sd.E):
        if not arith.all_zero(matmul(A, Ei) - sd.theta[i] * Ei, max_abs(A)):
            raise SpectrumError(f"A E_{i} != theta_{i} E_{i}")
        tr = sum(Ei[k, k] for k in range(n))
        if not arith.same(tr, sd.m[i]):
            raise SpectrumError(f"trace of E_{i} differs from its rank")
    # pairwise products through the eigenspace bases
    for i, j in itertools.combinations(range(len(sd.E)), 2):
        G = matmul(sd.spaces[i].basis.T, sd.spaces[j].basis)
        if not arith.all_zero(G, 1.0):
            raise SpectrumError(f"E_{i} E_{j} != 0")


@dataclass(frozen=True)
class KreinData:
    """Krein parameters ``q[h, i, j]`` in the ordering of the spectral data.

    ``cstar``, ``astar``, ``bstar`` are filled when that ordering is
    Q-polynomial (``cstar[0] = 0`` and ``bstar[D] = 0`` by convention).
    """

    q: np.ndarray
    cstar: tuple | None = None
    astar: tuple | None = None
    bstar: tuple | None = None

    def reordered(self, ordering) -> "KreinData":
        ordering = list(ordering)
        q = self.q[np.ix_(ordering, ordering, ordering)]
        return _with_dual_numbers(q)


def krein_parameters(sd: SpectralData) -> KreinData:
    """Solve E_i o E_j = |X|^{-1} sum_h q^h_ij E_h for the Krein table."""
    arith, n = sd.arith, sd.n
    size = len(sd.E)
    q = np.empty((size, size, size), dtype=object if arith.exact else float)
    for i in range(size):
        for j in range(i, size):
            H = sd.E[i] * sd.E[j]
            recon = arith.zeros((n, n))
            for h in range(size):
                val = n * np.sum(H * sd.E[h]) / sd.m[h]
                q[h, i, j] = q[h, j, i] = val
                recon = recon + sd.E[h] * val
            if not arith.all_zero(H * n - recon, n):
                raise SpectrumError(f"E_{i} o E_{j} is not in the span of the idempotents")
    floor = -arith.eps * n
    for h, i, j in itertools.product(range(size), repeat=3):
        if float(q[h, i, j]) < (0 if arith.exact else floor):
            raise SpectrumError(f"negative Krein parameter q^{h}_({i},{j}) = {q[h, i, j]}")
    for i in range(size):
        if not arith.same(q[0, i, i], sd.m[i], n):
            raise SpectrumError(f"q^0_({i},{i}) != m_{i}")
        for j in range(size):
            if i != j and not arith.is_zero(q[0, i, j], n):
                raise SpectrumError(f"q^0_({i},{j}) != 0")
    return _with_dual_numbers(q)


def _with_dual_numbers(q) -> KreinData:
    size = q.shape[0]
    D = size - 1
    if D < 1:
        return KreinData(q)
    zero = q[0, 0, 0] * 0
    cstar = (zero,) + tuple(q[i, 1, i - 1] for i in range(1, size))
    astar = tuple(q[i, 1, i] for i in range(size))
    bstar = tuple(q[i, 1, i + 1] for i in range(D)) + (zero,)
    return KreinData(q, cstar, astar, bstar)


def q_polynomial_orderings(kd: KreinData, arith: Arith, n: int) -> list[tuple[int, ...]]:
    """All orderings (E_0 first) whose Krein table has the tridiagonal pattern.

    Zero tests are scaled by |X|.  The list is in lexicographic order.
    """
    size = kd.q.shape[0]
    found = []
    for perm in itertools.permutations(range(1, size)):
        order = (0,) + perm
        if _is_q_polynomial(kd.q, order, arith, n):
            found.append(order)
    return found


def _is_q_polynomial(q, order, arith: Arith, n: int) -> bool:
    size = len(order)
    for h, i, j in itertools.product(range(size), repeat=3):
        val = q[order[h], order[i], order[j]]
        top = max(h, i, j)
        rest = h + i + j - top
        if top > rest and not arith.is_zero(val, n):
            return False
        if top == rest and arith.is_zero(val, n):
            return False
    return True


def check_multiplicity_formula(kd: KreinData, sd: SpectralData) -> bool:
    """Multiplicities from the dual intersection numbers (Q-polynomial order)."""
    arith = sd.arith
    if kd.cstar is None or any(arith.is_zero(x, sd.n) for x in kd.cstar[1:]):
        return False
    for i in range(len(sd.m)):
        num = arith.scalar(1)
        for h in range(i):
            num = num * kd.bstar[h]
        for h in range(1, i + 1):
            num = num / kd.cstar[h]
        if not arith.same(num, sd.m[i], sd.n):
            return False
    return True
