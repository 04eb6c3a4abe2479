"""Dual idempotents, the dual adjacency matrix and irreducible T-modules.

The standard module is split with the commutant of T: every symmetric
matrix commuting with A and A* has T-invariant eigenspaces, and for a
generic such matrix each eigenspace is irreducible.  That search always
runs in floating point.  In exact mode the isotypic projectors it finds
are promoted to rational matrices, verified exactly, and each isotypic
component is then split along an orthogonal basis of its lowest sphere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .graphs import DistanceData
from .kernel import (
    Arith,
    FLOAT,
    Subspace,
    as_float,
    matmul,
    max_abs,
    nullspace,
    orbit_span,
    rank,
    rationalize,
    span,
)
from .scheme import SpectralData


class DualDataError(ValueError):
    pass


class DecompositionError(RuntimeError):
    pass


class ExactPromotionError(ArithmeticError):
    """A float decomposition could not be certified over the rationals."""


class ProfileError(RuntimeError):
    pass


@dataclass(frozen=True)
class DualData:
    """Dual idempotents and dual adjacency matrix for base vertex ``x``.

    ``Estar[i]`` and ``Astar`` are stored as full diagonal matrices;
    ``spheres[i]`` lists the vertices at distance i from ``x``.
    """

    x: int
    spheres: tuple[np.ndarray, ...]
    Estar: tuple[np.ndarray, ...]
    Astar: np.ndarray
    theta_star: tuple
    arith: Arith

    @property
    def n(self) -> int:
        return self.Astar.shape[0]

    @property
    def diameter(self) -> int:
        return len(self.theta_star) - 1


def dual_data(sd: SpectralData, dd: DistanceData, x: int = 0) -> DualData:
    arith = sd.arith
    n = sd.n
    if not 0 <= x < n:
        raise DualDataError(f"base vertex {x} out of range")
    D = dd.diameter
    row = dd.dist[x]
    spheres = tuple(np.flatnonzero(row == i) for i in range(D + 1))
    Estar = []
    for i in range(D + 1):
        M = arith.zeros((n, n))
        for y in spheres[i]:
            M[y, y] = arith.scalar(1)
        Estar.append(M)
    diag = [n * sd.E[1][x, y] for y in range(n)]
    Astar = arith.zeros((n, n))
    for y in range(n):
        Astar[y, y] = diag[y]
    theta_star = []
    for i in range(D + 1):
        vals = [diag[y] for y in spheres[i]]
        if any(not arith.same(v, vals[0], n) for v in vals):
            raise DualDataError(f"A* is not constant on sphere {i}")
        theta_star.append(vals[0])
    for i, j in itertools.combinations(range(D + 1), 2):
        if arith.same(theta_star[i], theta_star[j], n):
            raise DualDataError(f"theta*_{i} = theta*_{j}")
    if not arith.same(theta_star[0], sd.m[1], n):
        raise DualDataError("theta*_0 differs from the multiplicity m_1")
    return DualData(x, spheres, tuple(Estar), Astar, tuple(theta_star), arith)


# ---------------------------------------------------------------------------
# modules


@dataclass(frozen=True)
class TModule:
    """An irreducible T-submodule of the standard module.

    ``basis`` holds pairwise orthogonal columns (orthonormal in float
    mode).  ``estar_dims[i]`` and ``e_dims[i]`` are dim E*_iW and dim E_iW.
    """

    basis: np.ndarray
    r: int
    t: int
    d: int
    dstar: int
    thin: bool
    dual_thin: bool
    estar_dims: tuple[int, ...]
    e_dims: tuple[int, ...]
    class_id: int = -1

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_trivial(self) -> bool:
        return self.r == 0 and self.t == 0 and self.d == len(self.estar_dims) - 1


@dataclass(frozen=True)
class Decomposition:
    modules: tuple[TModule, ...]
    seed: int
    attempts: int
    exact: bool
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def thin_modules(self) -> tuple[TModule, ...]:
        return tuple(W for W in self.modules if W.thin)


def _commutant_basis(A: np.ndarray, Astar_diag: np.ndarray, spheres) -> list[np.ndarray]:
    """Symmetric matrices commuting with A and with diagonal A*.

    Commuting with A* forces a block structure along the spheres, so
    only entries inside a sphere block are unknowns.
    """
    n = A.shape[0]
    slots = []
    for sph in spheres:
        for a_idx, a in enumerate(sph):
            for b in sph[a_idx:]:
                slots.append((int(a), int(b)))
    cols = []
    for a, b in slots:
        S = np.zeros((n, n))
        S[a, b] = S[b, a] = 1.0
        cols.append((S @ A - A @ S).ravel())
    L = np.column_stack(cols)
    K = nullspace(L, FLOAT)
    basis = []
    for k in range(K.shape[1]):
        C = np.zeros((n, n))
        for coef, (a, b) in zip(K[:, k], slots):
            C[a, b] = C[b, a] = coef
        basis.append(C)
    return basis


def _is_irreducible(Ar: np.ndarray, Asr: np.ndarray, rng: np.random.Generator) -> bool:
    k = Ar.shape[0]
    I = np.eye(k)
    # Schur test: the restricted commutant must be the scalars
    L = np.vstack([np.kron(I, Ar) - np.kron(Ar.T, I), np.kron(I, Asr) - np.kron(Asr.T, I)])
    if nullspace(L, FLOAT).shape[1] != 1:
        return False
    v = rng.standard_normal(k)
    return orbit_span(v, [Ar, Asr], FLOAT).dim == k


def _float_split(A, Astar_diag, spheres, seed: int, retries: int):
    n = A.shape[0]
    basis = _commutant_basis(A, Astar_diag, spheres)
    As = np.diag(Astar_diag)
    scale = max(1.0, float(np.max(np.abs(A))), float(np.max(np.abs(Astar_diag))))
    for attempt in range(retries):
        rng = np.random.default_rng(seed + attempt)
        coeffs = rng.standard_normal(len(basis))
        C0 = sum(c * B for c, B in zip(coeffs, basis))
        w, V = np.linalg.eigh(C0)
        spread = max(1.0, float(np.max(np.abs(w))))
        groups: list[list[int]] = []
        for k in range(n):
            if groups and abs(w[groups[-1][-1]] - w[k]) <= 1e-8 * spread:
                groups[-1].append(k)
            else:
                groups.append([k])
        pieces = []
        ok = True
        for g in groups:
            Q = V[:, g]
            Ar = Q.T @ A @ Q
            Asr = Q.T @ As @ Q
            if (np.max(np.abs(A @ Q - Q @ Ar)) > 1e-8 * scale
                    or np.max(np.abs(As @ Q - Q @ Asr)) > 1e-8 * scale
                    or not _is_irreducible(Ar, Asr, rng)):
                ok = False
                break
            pieces.append(Q)
        if ok:
            return pieces, attempt + 1
    raise DecompositionError(f"no irreducible splitting after {retries} seeds starting at {seed}")


def _dims(B: np.ndarray, dual: DualData, sd: SpectralData, arith: Arith):
    estar = tuple(rank(B[sph, :], arith) if len(sph) else 0 for sph in dual.spheres)
    e = tuple(rank(matmul(S.basis.T, B), arith) for S in sd.spaces)
    return estar, e


def _support(dims) -> tuple[int, int]:
    idx = [i for i, m in enumerate(dims) if m > 0]
    lo, hi = idx[0], idx[-1]
    if idx != list(range(lo, hi + 1)):
        raise ProfileError(f"support {idx} is not an interval")
    return lo, hi - lo


def module_profile(basis: np.ndarray, dual: DualData, sd: SpectralData, arith: Arith,
                   class_id: int = -1) -> TModule:
    """Endpoint, dual endpoint, diameters and thinness of a module."""
    estar, e = _dims(basis, dual, sd, arith)
    r, d = _support(estar)
    t, dstar = _support(e)
    thin = all(m <= 1 for m in estar)
    dual_thin = all(m <= 1 for m in e)
    if sum(estar) != basis.shape[1] or sum(e) != basis.shape[1]:
        raise ProfileError("sphere or eigenspace pieces do not fill the module")
    if thin:
        if not dual_thin or d != dstar:
            raise ProfileError("thin module that is not dual thin with d = d*")
        v = _lowest_vector(basis, dual, r, arith)
        for i, S in enumerate(sd.spaces):
            Ev = S.project(v)
            nonzero = not arith.all_zero(Ev, max_abs(v))
            if nonzero != (e[i] > 0):
                raise ProfileError(f"E_{i}W != E_{i}E*_rW")
    return TModule(basis, r, t, d, dstar, thin, dual_thin, estar, e, class_id)


def _lowest_vector(basis: np.ndarray, dual: DualData, r: int, arith: Arith) -> np.ndarray:
    """A nonzero vector of E*_rW (the largest projected basis column)."""
    P = matmul(dual.Estar[r], basis)
    norms = [max_abs(P[:, k]) for k in range(P.shape[1])]
    k = int(np.argmax(norms))
    return P[:, k]


def _signature(Q: np.ndarray, A: np.ndarray, spheres) -> tuple[float, ...]:
    """Traces of E*_iA and E*_iAE*_{i-1}A on the module (float)."""
    P = Q @ Q.T
    sig = []
    for i, sph in enumerate(spheres):
        Ei = np.zeros(P.shape[0])
        Ei[sph] = 1.0
        EA = Ei[:, None] * A
        sig.append(float(np.trace(EA @ P)))
        if i:
            Em = np.zeros(P.shape[0])
            Em[spheres[i - 1]] = 1.0
            sig.append(float(np.trace(EA @ (Em[:, None] * A) @ P)))
    return tuple(sig)


def _class_key(W: TModule, sig) -> tuple:
    return (W.r, W.t, W.d, W.estar_dims, W.e_dims)


def decompose_standard_module(dual: DualData, sd: SpectralData, seed: int = 0,
                              retries: int = 8) -> Decomposition:
    """Orthogonal decomposition of the standard module into irreducibles."""
    arith = sd.arith
    A = as_float(sd.A)
    astar = np.array([float(dual.Astar[y, y]) for y in range(dual.n)])
    fdual, fsd = dual, sd
    if arith.exact:
        fdual, fsd = _float_views(dual, sd)
    pieces, attempts = _float_split(A, astar, dual.spheres, seed, retries)
    profiled = []
    for Q in pieces:
        W = module_profile(Q, fdual, fsd, FLOAT)
        profiled.append((W, _signature(Q, A, dual.spheres)))
    classes = _group(profiled)
    order = sorted(range(len(classes)), key=lambda c: _class_sort_key(classes[c]))
    modules = []
    for new_id, c in enumerate(order):
        for W, _ in classes[c]:
            modules.append(_with_class(W, new_id))
    total = sum(W.dim for W in modules)
    if total != dual.n:
        raise DecompositionError(f"module dimensions add to {total}, not {dual.n}")
    trivial = [W for W in modules if W.is_trivial]
    if len(trivial) != 1:
        raise DecompositionError(f"{len(trivial)} modules look trivial, expected exactly one")
    decomposition = Decomposition(tuple(modules), seed, attempts, False)
    if arith.exact:
        return promote_exact(decomposition, dual, sd)
    return decomposition


def _group(profiled):
    classes: list[list] = []
    for W, sig in profiled:
        for cls in classes:
            W0, sig0 = cls[0]
            if _class_key(W0, sig0) == _class_key(W, sig) and all(
                abs(a - b) <= 1e-6 * max(1.0, abs(a)) for a, b in zip(sig0, sig)
            ):
                cls.append((W, sig))
                break
        else:
            classes.append([(W, sig)])
    return classes


def _class_sort_key(cls):
    W, sig = cls[0]
    return (W.r, W.t, W.d, not W.thin, tuple(round(s, 9) for s in sig))


def _with_class(W: TModule, class_id: int) -> TModule:
    return TModule(W.basis, W.r, W.t, W.d, W.dstar, W.thin, W.dual_thin,
                   W.estar_dims, W.e_dims, class_id)


def _float_views(dual: DualData, sd: SpectralData):
    fsd = SpectralData(
        tuple(float(x) for x in sd.theta),
        tuple(as_float(E) for E in sd.E),
        sd.m,
        tuple(span(as_float(S.basis), FLOAT) for S in sd.spaces),
        as_float(sd.A),
        FLOAT,
    )
    fdual = DualData(dual.x, dual.spheres, tuple(as_float(E) for E in dual.Estar),
                     as_float(dual.Astar), tuple(float(x) for x in dual.theta_star), FLOAT)
    return fdual, fsd


def promote_exact(dec: Decomposition, dual: DualData, sd: SpectralData) -> Decomposition:
    """Rebuild a float decomposition with rational, exactly verified modules.

    For each isomorphism class the float isotypic projector is rounded to
    rationals and checked to be a symmetric idempotent commuting with A
    and A*.  Its image on the lowest sphere gets an orthogonal rational
    basis v_1, .., v_m; each v_j generates one module with basis
    E*_{r+i} A^i v_j.  Vectors of that sphere that are orthogonal give
    orthogonal modules, because E*_r T E*_r acts on the sphere part of an
    isotypic component of thin modules by scalars.
    """
    arith = sd.arith
    A = sd.A
    n = sd.n
    by_class: dict[int, list[TModule]] = {}
    for W in dec.modules:
        by_class.setdefault(W.class_id, []).append(W)
    modules: list[TModule] = []
    notes = list(dec.notes)
    projectors = []
    for cid in sorted(by_class):
        members = by_class[cid]
        head = members[0]
        if not head.thin:
            notes.append(f"class {cid} is not thin; kept in floating point")
            modules.extend(members)
            continue
        Pf = sum(W.basis @ W.basis.T for W in members)
        P = rationalize(Pf)
        if not (arith.all_zero(P - P.T)
                and arith.all_zero(matmul(P, P) - P)
                and arith.all_zero(matmul(A, P) - matmul(P, A))
                and arith.all_zero(matmul(dual.Astar, P) - matmul(P, dual.Astar))):
            raise ExactPromotionError(f"isotypic projector of class {cid} is not rational")
        projectors.append(P)
        low = matmul(dual.Estar[head.r], P)
        S = span(low, arith)
        if S.dim != len(members):
            raise ExactPromotionError(f"class {cid}: lowest sphere has dimension {S.dim}")
        for k in range(S.dim):
            v = S.basis[:, k]
            cols = []
            w = v
            for i in range(head.d + 1):
                cols.append(matmul(dual.Estar[head.r + i], w.reshape(-1, 1)).ravel())
                w = matmul(A, cols[-1].reshape(-1, 1)).ravel()
            B = np.column_stack(cols)
            W = module_profile(B, dual, sd, arith, class_id=cid)
            if (W.r, W.t, W.d) != (head.r, head.t, head.d):
                raise ExactPromotionError(f"class {cid}: rational module has a different profile")
            modules.append(W)
    for P, Q in itertools.combinations(projectors, 2):
        if not arith.all_zero(matmul(P, Q)):
            raise ExactPromotionError("isotypic projectors are not orthogonal")
    return Decomposition(tuple(modules), dec.seed, dec.attempts, True, tuple(notes))


def module_projector(W: TModule, arith: Arith) -> np.ndarray:
    return Subspace(W.basis, arith).projector()


def invariance_residual(W: TModule, dual: DualData, sd: SpectralData) -> float:
    """max |(I - P_W) X P_W| over X in {A, A*} (0 means closed)."""
    arith = sd.arith
    S = Subspace(W.basis, arith)
    worst = 0.0
    for X in (sd.A, dual.Astar):
        image = matmul(X, W.basis)
        for k in range(W.dim):
            col = image[:, k]
            worst = max(worst, max_abs(col - S.project(col)))
    return worst


def verify_triple_products(dual: DualData, sd: SpectralData) -> list[str]:
    """Check the zero pattern of E*_i A^h E*_j and E_i A*^h E_j on V.

    Returns a list of violations (empty when the law holds).  The first
    product is read off sphere blocks of A^h; the second uses eigenspace
    bases so only small matrices are formed.
    """
    arith = sd.arith
    D = dual.diameter
    n = sd.n
    problems = []
    Ah = arith.eye(n)
    for h in range(D + 1):
        for i, j in itertools.product(range(D + 1), repeat=2):
            block = Ah[np.ix_(dual.spheres[i], dual.spheres[j])]
            zero = arith.all_zero(block, max_abs(Ah))
            if h < abs(i - j) and not zero:
                problems.append(f"E*_{i} A^{h} E*_{j} != 0")
            if h == abs(i - j) and zero:
                problems.append(f"E*_{i} A^{h} E*_{j} == 0")
        Ah = matmul(Ah, sd.A)
    diag = np.array([dual.Astar[y, y] for y in range(n)], dtype=object if arith.exact else float)
    power = np.array([arith.scalar(1)] * n, dtype=object if arith.exact else float)
    for h in range(D + 1):
        for i, j in itertools.product(range(D + 1), repeat=2):
            Bi = sd.spaces[i].basis
            Bj = sd.spaces[j].basis
            block = matmul(Bi.T, power[:, None] * Bj)
            zero = arith.all_zero(block, max(1.0, max_abs(power)))
            if h < abs(i - j) and not zero:
                problems.append(f"E_{i} A*^{h} E_{j} != 0")
            if h == abs(i - j) and zero:
                problems.append(f"E_{i} A*^{h} E_{j} == 0")
        power = power * diag
    return problems
