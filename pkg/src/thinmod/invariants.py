"""Per-module scalars, bases and split data read off the matrices directly.

Everything here works with the actual module W inside the standard
module.  Operators are restricted to W through its (orthogonal) basis, so
traces and operator identities cost (dim W)^2 rather than |X|^2.  Nothing
in this module uses the closed forms of :mod:`thinmod.params`; the two are
compared by the report layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import poly
from .kernel import Arith, Subspace, dot, intersect, matmul, max_abs, rank, sign_normalize, solve, span, sum_spaces
from .params import AuditReport, ParameterArray, phi_from_varphi, varphi_from_phi
from .scheme import SpectralData
from .terwilliger import DualData, TModule


class ModuleError(RuntimeError):
    """The module does not meet the preconditions of the analysis."""


class NotThinError(ModuleError):
    pass


class DegenerateOverlap(ModuleError):
    pass


SCALAR_FIELDS = ("a", "astar", "b", "bstar", "c", "cstar", "x", "xstar", "m", "mstar", "k", "kstar")


@dataclass(frozen=True)
class ModuleScalars:
    """Per-module scalars with the index conventions of :class:`thinmod.params.DerivedScalars`."""

    d: int
    a: tuple
    astar: tuple
    b: tuple
    bstar: tuple
    c: tuple
    cstar: tuple
    x: tuple
    xstar: tuple
    m: tuple
    mstar: tuple
    nu: object
    k: tuple
    kstar: tuple


@dataclass(frozen=True)
class ModuleBases:
    """Six bases of W, each stored as the columns of an |X| x (d+1) matrix."""

    u: np.ndarray
    v: np.ndarray
    power: np.ndarray
    dual_power: np.ndarray
    standard: np.ndarray
    dual_standard: np.ndarray
    split: np.ndarray
    down_split: np.ndarray


@dataclass(frozen=True)
class SplitData:
    varphi: tuple
    phi: tuple
    U: tuple
    U_down: tuple


@dataclass
class ModuleAnalysis:
    module: TModule
    scalars: ModuleScalars
    bases: ModuleBases
    split: SplitData
    parameter_array: ParameterArray
    reps: dict
    polys: dict
    audit: AuditReport

    @property
    def passed(self) -> bool:
        return self.audit.passed


# ---------------------------------------------------------------------------
# restriction to W


class RestrictedModule:
    """Matrices of A, A*, E*_{r+i}, E_{t+i} acting on W in the module basis.

    Index i of ``Es`` and ``E`` is relative: ``Es[i]`` is E*_{r+i}.
    """

    def __init__(self, W: TModule, dual: DualData, sd: SpectralData):
        if not W.thin:
            raise NotThinError(f"module with E* dims {W.estar_dims} is not thin")
        self.W, self.dual, self.sd = W, dual, sd
        self.arith = sd.arith
        self.B = W.basis
        self.gram = [dot(self.B[:, k], self.B[:, k]) for k in range(W.dim)]
        self.r, self.t, self.d = W.r, W.t, W.d
        self.theta = tuple(sd.theta[W.t + i] for i in range(W.d + 1))
        self.theta_star = tuple(dual.theta_star[W.r + i] for i in range(W.d + 1))
        self.A = self.restrict(sd.A)
        self.As = self.restrict(dual.Astar)
        self.Es = [self.restrict(dual.Estar[W.r + i]) for i in range(W.d + 1)]
        self.E = [self.restrict(sd.E[W.t + i]) for i in range(W.d + 1)]
        self.I = self.arith.eye(W.dim)

    def restrict(self, X) -> np.ndarray:
        M = matmul(self.B.T, matmul(X, self.B))
        for k, g in enumerate(self.gram):
            M[k, :] = M[k, :] / g
        return M

    def lift(self, coords) -> np.ndarray:
        return matmul(self.B, np.asarray(coords).reshape(-1, 1)).ravel()

    def coords(self, vec) -> np.ndarray:
        c = matmul(self.B.T, np.asarray(vec).reshape(-1, 1)).ravel()
        return np.array([c[k] / g for k, g in enumerate(self.gram)], dtype=c.dtype)


def _mul(*Ms):
    out = Ms[0]
    for M in Ms[1:]:
        out = matmul(out, M)
    return out


def _trace(M):
    return sum((M[k, k] for k in range(M.shape[0])), M[0, 0] * 0)


def _apply(M, c):
    return matmul(M, np.asarray(c).reshape(-1, 1)).ravel()


# ---------------------------------------------------------------------------
# traces


def trace_scalars(R: RestrictedModule, rep: AuditReport):
    """a_i, x_i, a*_i, x*_i as traces, with the operator identities they come from."""
    d = R.d
    if d < 1:
        raise ModuleError("trace scalars need d >= 1")
    zero = R.arith.scalar(0)
    a = [_trace(_mul(R.Es[i], R.A)) for i in range(d + 1)]
    astar = [_trace(_mul(R.E[i], R.As)) for i in range(d + 1)]
    x = [zero] + [_trace(_mul(R.Es[i], R.A, R.Es[i - 1], R.A)) for i in range(1, d + 1)]
    xstar = [zero] + [_trace(_mul(R.E[i], R.As, R.E[i - 1], R.As)) for i in range(1, d + 1)]
    for i in range(d + 1):
        rep.record_array("diag_entry_identity", _mul(R.Es[i], R.A, R.Es[i]), R.Es[i] * a[i])
        rep.record_array("diag_entry_identity_dual", _mul(R.E[i], R.As, R.E[i]), R.E[i] * astar[i])
        if i >= 1:
            rep.record_array("x_identity_upper", _mul(R.Es[i], R.A, R.Es[i - 1], R.A, R.Es[i]), R.Es[i] * x[i])
            rep.record_array("x_identity_lower", _mul(R.Es[i - 1], R.A, R.Es[i], R.A, R.Es[i - 1]),
                             R.Es[i - 1] * x[i])
            rep.record_array("x_identity_upper_dual", _mul(R.E[i], R.As, R.E[i - 1], R.As, R.E[i]),
                             R.E[i] * xstar[i])
            rep.record_array("x_identity_lower_dual", _mul(R.E[i - 1], R.As, R.E[i], R.As, R.E[i - 1]),
                             R.E[i - 1] * xstar[i])
            rep.record_flag("x_positive", float(x[i]) > 0 and R.arith.nonzero(x[i]))
            rep.record_flag("xstar_positive", float(xstar[i]) > 0 and R.arith.nonzero(xstar[i]))
    rep.record("a_sum", sum(a, zero), sum(R.theta, zero))
    rep.record("astar_sum", sum(astar, zero), sum(R.theta_star, zero))
    return tuple(a), tuple(x), tuple(astar), tuple(xstar)


def overlap_scalars(R: RestrictedModule, rep: AuditReport):
    """m_i, m*_i, nu, k_i, k*_i from traces of idempotent products."""
    arith, d = R.arith, R.d
    one, zero = arith.scalar(1), arith.scalar(0)
    m = [_trace(_mul(R.E[i], R.Es[0])) for i in range(d + 1)]
    mstar = [_trace(_mul(R.Es[i], R.E[0])) for i in range(d + 1)]
    if arith.is_zero(m[0]) or float(m[0]) <= 0:
        raise DegenerateOverlap(f"m_0(W) = {m[0]} is not positive")
    rep.record("m0_equals_mstar0", m[0], mstar[0])
    nu = one / m[0]
    k = [ms * nu for ms in mstar]
    kstar = [mm * nu for mm in m]
    rep.record("m_sum", sum(m, zero), one)
    rep.record("mstar_sum", sum(mstar, zero), one)
    for i in range(d + 1):
        rep.record_flag("m_positive", float(m[i]) > 0 and arith.nonzero(m[i]))
        rep.record_flag("mstar_positive", float(mstar[i]) > 0 and arith.nonzero(mstar[i]))
        rep.record_array("overlap_identity_e", _mul(R.E[i], R.Es[0], R.E[i]), R.E[i] * m[i])
        rep.record_array("overlap_identity_estar", _mul(R.Es[0], R.E[i], R.Es[0]), R.Es[0] * m[i])
        rep.record_array("overlap_identity_estar_dual", _mul(R.Es[i], R.E[0], R.Es[i]), R.Es[i] * mstar[i])
        rep.record_array("overlap_identity_e_dual", _mul(R.E[0], R.Es[i], R.E[0]), R.E[0] * mstar[i])
    rep.record_array("nu_identity_e", _mul(R.E[0], R.Es[0], R.E[0]) * nu, R.E[0])
    rep.record_array("nu_identity_estar", _mul(R.Es[0], R.E[0], R.Es[0]) * nu, R.Es[0])
    rep.record("k0_is_one", k[0], one)
    rep.record("kstar0_is_one", kstar[0], one)
    rep.record("k_sum_is_nu", sum(k, zero), nu)
    rep.record("kstar_sum_is_nu", sum(kstar, zero), nu)
    return tuple(m), tuple(mstar), nu, tuple(k), tuple(kstar)


# ---------------------------------------------------------------------------
# bases


def _pick_vector(R: RestrictedModule, P: np.ndarray) -> np.ndarray:
    """Normalised vector spanning the image of the rank-one restricted projector P."""
    norms = [max_abs(P[:, k]) for k in range(P.shape[1])]
    col = P[:, int(np.argmax(norms))]
    vec = sign_normalize(R.lift(col))
    if R.arith.exact:
        mags = [abs(x) for x in vec]
        top = max(mags)
        return vec / next(x for x in vec if abs(x) == top)
    return vec / np.sqrt(float(dot(vec, vec)))


def _columns(vectors, arith: Arith) -> np.ndarray:
    M = arith.zeros((len(vectors[0]), len(vectors)))
    for k, w in enumerate(vectors):
        M[:, k] = w
    return M


def standard_bases(R: RestrictedModule, rep: AuditReport) -> ModuleBases:
    arith, d, sd, dual = R.arith, R.d, R.sd, R.dual
    u = _pick_vector(R, R.E[0])
    v = _pick_vector(R, R.Es[0])
    A, As = sd.A, dual.Astar
    power, dual_power, standard, dual_standard, split, down = [], [], [], [], [], []
    w = v
    wd = u
    for i in range(d + 1):
        power.append(_col(matmul(dual.Estar[R.r + i], w.reshape(-1, 1))))
        dual_power.append(_col(matmul(sd.E[R.t + i], wd.reshape(-1, 1))))
        w = _col(matmul(A, w.reshape(-1, 1)))
        wd = _col(matmul(As, wd.reshape(-1, 1)))
        standard.append(_col(matmul(dual.Estar[R.r + i], u.reshape(-1, 1))))
        dual_standard.append(_col(matmul(sd.E[R.t + i], v.reshape(-1, 1))))
    cur_up, cur_down = v, v
    for i in range(d + 1):
        split.append(cur_up)
        down.append(cur_down)
        cur_up = _col(matmul(A, cur_up.reshape(-1, 1))) - R.theta[i] * cur_up
        cur_down = _col(matmul(A, cur_down.reshape(-1, 1))) - R.theta[d - i] * cur_down
    bases = ModuleBases(u, v, *(_columns(b, arith) for b in (power, dual_power, standard, dual_standard,
                                                               split, down)))
    for name in ("power", "dual_power", "standard", "dual_standard", "split", "down_split"):
        M = getattr(bases, name)
        ok = all(arith.nonzero(max_abs(M[:, k]), 1.0) for k in range(d + 1))
        if not ok:
            raise ModuleError(f"{name} basis has a zero member")
        rep.record_flag(f"{name}_basis_independent", rank(M, arith) == d + 1)
    for name in ("power", "dual_power", "standard", "dual_standard"):
        M = getattr(bases, name)
        G = matmul(M.T, M)
        off = G - np.diag(np.diag(G))
        rep.record_array(f"{name}_basis_orthogonal", off, arith.zeros(off.shape), max_abs(G))
    # the standard basis sums to u, which lies in E_tW (and dually for v)
    total = sum((bases.standard[:, i] for i in range(d + 1)), arith.zeros(u.shape))
    rep.record_array("standard_basis_sum", total, u)
    rep.record_array("standard_basis_sum_in_Et", _col(matmul(sd.E[R.t], total.reshape(-1, 1))), total)
    total = sum((bases.dual_standard[:, i] for i in range(d + 1)), arith.zeros(v.shape))
    rep.record_array("dual_standard_basis_sum", total, v)
    rep.record_array("dual_standard_basis_sum_in_Estar_r",
                     _col(matmul(dual.Estar[R.r], total.reshape(-1, 1))), total)
    return bases


def _col(M) -> np.ndarray:
    return np.asarray(M).ravel()


def represent(X, basis: np.ndarray, arith: Arith) -> np.ndarray:
    """Matrix M with X basis = basis M (columns give images)."""
    G = matmul(basis.T, basis)
    return solve(G, matmul(basis.T, matmul(X, basis)), arith)


def _tridiagonal_parts(M):
    n = M.shape[0]
    return ([M[i, i] for i in range(n)],
            [M[i, i + 1] for i in range(n - 1)],
            [M[i + 1, i] for i in range(n - 1)])


def rep_matrices(R: RestrictedModule, bases: ModuleBases, a, x, rep: AuditReport):
    """Matrices of A and A* in the power, standard, dual standard and split bases.

    Returns ``(reps, b, c, bstar, cstar)`` with the index conventions of
    :class:`ModuleScalars`.
    """
    arith, d, sd, dual = R.arith, R.d, R.sd, R.dual
    zero, one = arith.scalar(0), arith.scalar(1)
    reps = {}
    for key, basis in (("standard", bases.standard), ("dual_standard", bases.dual_standard),
                       ("power", bases.power), ("split", bases.split), ("down_split", bases.down_split)):
        reps[f"A_{key}"] = represent(sd.A, basis, arith)
        reps[f"Astar_{key}"] = represent(dual.Astar, basis, arith)

    n = d + 1
    flat, flat_star = reps["A_standard"], reps["Astar_standard"]
    sharp, sharp_star = reps["A_dual_standard"], reps["Astar_dual_standard"]
    diag, upper, lower = _tridiagonal_parts(flat)
    b = tuple(upper) + (zero,)
    c = (zero,) + tuple(lower)
    diag_s, upper_s, lower_s = _tridiagonal_parts(sharp_star)
    bstar = tuple(upper_s) + (zero,)
    cstar = (zero,) + tuple(lower_s)

    tri = _banded(flat, 1)
    rep.record_array("flat_A_tridiagonal", flat - tri, arith.zeros((n, n)), max_abs(flat))
    rep.record_array("sharp_Astar_tridiagonal", sharp_star - _banded(sharp_star, 1), arith.zeros((n, n)),
                     max_abs(sharp_star))
    for i in range(n):
        rep.record("flat_row_sum", sum((flat[i, j] for j in range(n)), zero), R.theta[0])
        rep.record("sharp_star_row_sum", sum((sharp_star[i, j] for j in range(n)), zero), R.theta_star[0])
        rep.record("flat_diagonal_is_a", diag[i], a[i])
    for i in range(d):
        rep.record_flag("flat_irreducible", arith.nonzero(upper[i]) and arith.nonzero(lower[i]))
        rep.record_flag("sharp_star_irreducible", arith.nonzero(upper_s[i]) and arith.nonzero(lower_s[i]))
    rep.record_array("flat_Astar_diagonal", flat_star, np.diag(R.theta_star).astype(flat_star.dtype))
    rep.record_array("sharp_A_diagonal", sharp, np.diag(R.theta).astype(sharp.dtype))

    # power basis: ones below the diagonal, x_i above it
    P = reps["A_power"]
    expect = arith.zeros((n, n))
    for i in range(n):
        expect[i, i] = a[i]
        if i + 1 < n:
            expect[i + 1, i] = one
            expect[i, i + 1] = x[i + 1]
    rep.record_array("power_basis_rep", P, expect)

    # split bases: lower bidiagonal A with ones, upper bidiagonal A*
    for key, order in (("split", R.theta), ("down_split", R.theta[::-1])):
        expect = arith.zeros((n, n))
        for i in range(n):
            expect[i, i] = order[i]
            if i + 1 < n:
                expect[i + 1, i] = one
        rep.record_array(f"{key}_A_rep", reps[f"A_{key}"], expect)
        Ms = reps[f"Astar_{key}"]
        rep.record_array(f"{key}_Astar_upper_bidiagonal", Ms - _banded(Ms, 0, upper_only=True),
                         arith.zeros((n, n)), max_abs(Ms))
        rep.record_array(f"{key}_Astar_diagonal", [Ms[i, i] for i in range(n)], list(R.theta_star))

    for i in range(1, n):
        rep.record("b_times_c_is_x", b[i - 1] * c[i], x[i])
    for i in range(n):
        rep.record("row_sum_theta_t", c[i] + diag[i] + b[i], R.theta[0])
    return reps, b, c, bstar, cstar


def _banded(M, width: int, upper_only: bool = False):
    """Copy of M with entries outside the band zeroed."""
    n = M.shape[0]
    out = M.copy()
    for i in range(n):
        for j in range(n):
            keep = (0 <= j - i <= 1) if upper_only else abs(i - j) <= width
            if not keep:
                out[i, j] = M[i, j] * 0
    return out


# ---------------------------------------------------------------------------
# split decomposition


def _rayleigh(op_vec, w, arith: Arith):
    """<w, op w> / <w, w> and the residual of op w - value w."""
    value = dot(w, op_vec) / dot(w, w)
    residual = max_abs(op_vec - value * w)
    return value, residual


def split_decomposition(R: RestrictedModule, bases: ModuleBases, rep: AuditReport) -> tuple[SplitData, ParameterArray]:
    arith, d, sd, dual = R.arith, R.d, R.sd, R.dual
    n_vertices = sd.n
    A, As = sd.A, dual.Astar
    I = arith.eye(n_vertices)
    varphi, phi = [], []
    U = [span([bases.split[:, i]], arith) for i in range(d + 1)]
    U_down = [span([bases.down_split[:, i]], arith) for i in range(d + 1)]
    for i in range(1, d + 1):
        w = bases.split[:, i]
        step = _col(matmul(As - R.theta_star[i] * I, w.reshape(-1, 1)))
        image = _col(matmul(A - R.theta[i - 1] * I, step.reshape(-1, 1)))
        val, res = _rayleigh(image, w, arith)
        rep.record("varphi_eigen_residual", res, 0, max_abs(image))
        varphi.append(val)
        w = bases.down_split[:, i]
        step = _col(matmul(As - R.theta_star[i] * I, w.reshape(-1, 1)))
        image = _col(matmul(A - R.theta[d - i + 1] * I, step.reshape(-1, 1)))
        val, res = _rayleigh(image, w, arith)
        rep.record("phi_eigen_residual", res, 0, max_abs(image))
        phi.append(val)
    for i, val in enumerate(varphi, start=1):
        rep.record_flag("varphi_nonzero", arith.nonzero(val))
        rep.record("split_A_star_entry", reps_entry(bases.split, dual.Astar, arith, i - 1, i), val)
    for i, val in enumerate(phi, start=1):
        rep.record_flag("phi_nonzero", arith.nonzero(val))
        rep.record("down_split_A_star_entry", reps_entry(bases.down_split, dual.Astar, arith, i - 1, i), val)

    # U_i as an intersection of sphere sums and eigenspace sums inside W
    Bw = R.B
    ambient = n_vertices
    sphere_parts = [span(matmul(dual.Estar[R.r + h], Bw), arith) for h in range(d + 1)]
    eigen_parts = [span(matmul(sd.E[R.t + h], Bw), arith) for h in range(d + 1)]
    for i in range(d + 1):
        low = sum_spaces(sphere_parts[: i + 1], arith, ambient)
        high = sum_spaces(eigen_parts[i:], arith, ambient)
        cap = intersect(low, high)
        rep.record_flag("U_is_intersection", cap.dim == 1 and cap.contains_space(U[i]))
        high_down = sum_spaces(eigen_parts[: d - i + 1], arith, ambient)
        cap = intersect(low, high_down)
        rep.record_flag("U_down_is_intersection", cap.dim == 1 and cap.contains_space(U_down[i]))

    th, ths = R.theta, R.theta_star
    rep.record_array("varphi_from_phi", list(varphi), list(varphi_from_phi(th, ths, phi)),
                     max(max_abs(list(varphi)), 1.0))
    rep.record_array("phi_from_varphi", list(phi), list(phi_from_varphi(th, ths, varphi)),
                     max(max_abs(list(phi)), 1.0))
    pa = ParameterArray(R.r, R.t, d, th, ths, tuple(varphi), tuple(phi))
    return SplitData(tuple(varphi), tuple(phi), tuple(U), tuple(U_down)), pa


def reps_entry(basis, X, arith: Arith, i: int, j: int):
    return represent(X, basis, arith)[i, j]


# ---------------------------------------------------------------------------
# inner products


def module_polynomials(sc: ModuleScalars, arith: Arith, theta0, theta_star0) -> dict:
    """p, u, v and their duals from the matrix scalars, via the three-term recurrence."""
    d, one = sc.d, arith.scalar(1)
    p = poly.three_term(sc.a, sc.x, one, d + 2)
    ps = poly.three_term(sc.astar, sc.xstar, one, d + 2)
    out = {"p": p, "pstar": ps}
    out["u"] = [poly.scale(p[i], 1 / poly.evaluate(p[i], theta0)) for i in range(d + 1)]
    out["ustar"] = [poly.scale(ps[i], 1 / poly.evaluate(ps[i], theta_star0)) for i in range(d + 1)]
    cprod, csprod = one, one
    v, vs = [], []
    for i in range(d + 1):
        if i >= 1:
            cprod, csprod = cprod * sc.c[i], csprod * sc.cstar[i]
        v.append(poly.scale(p[i], 1 / cprod))
        vs.append(poly.scale(ps[i], 1 / csprod))
    out["v"], out["vstar"] = v, vs
    return out


def inner_product_audit(R: RestrictedModule, bases: ModuleBases, sc: ModuleScalars, polys: dict,
                        rep: AuditReport) -> AuditReport:
    arith, d, sd, dual = R.arith, R.d, R.sd, R.dual
    u, v = bases.u, bases.v
    uu, vv, uv = dot(u, u), dot(v, v), dot(u, v)
    nu, k, ks = sc.nu, sc.k, sc.kstar
    zero = arith.scalar(0)
    rep.record_flag("u_v_not_orthogonal", arith.nonzero(uv, max(float(uu), float(vv))))
    rep.record("nu_uv_squared", nu * uv * uv, uu * vv)
    Er_u = bases.standard[:, 0]
    Et_v = bases.dual_standard[:, 0]
    rep.record("first_overlap", dot(Er_u, Et_v), uv / nu)
    rep.record_array("Er_u_along_v", Er_u, v * (uv / vv))
    rep.record_array("Et_v_along_u", Et_v, u * (uv / uu))
    for i in range(d + 1):
        w = bases.standard[:, i]
        wd = bases.dual_standard[:, i]
        rep.record("standard_norm", dot(w, w), uu * k[i] / nu)
        rep.record("dual_standard_norm", dot(wd, wd), vv * ks[i] / nu)
        for j in range(d + 1):
            lhs = dot(w, bases.dual_standard[:, j])
            scale = k[i] * ks[j] * uv / nu
            rep.record("overlap_via_u", lhs, poly.evaluate(polys["u"][i], R.theta[j]) * scale)
            rep.record("overlap_via_ustar", lhs, poly.evaluate(polys["ustar"][j], R.theta_star[i]) * scale)
        # transition formulas between the two bases
        acc = arith.zeros(u.shape)
        acc_d = arith.zeros(u.shape)
        for j in range(d + 1):
            acc = acc + bases.dual_standard[:, j] * poly.evaluate(polys["v"][i], R.theta[j])
            acc_d = acc_d + bases.standard[:, j] * poly.evaluate(polys["vstar"][i], R.theta_star[j])
        rep.record_array("transition_standard", w, acc * (uv / vv))
        rep.record_array("transition_dual_standard", wd, acc_d * (uv / uu))
        # v_i(A) E*_r u = E*_{r+i} u
        coeffs = polys["v"][i]
        acc = arith.zeros(u.shape)
        power = Er_u
        for cf in coeffs:
            acc = acc + power * cf
            power = _col(matmul(sd.A, power.reshape(-1, 1)))
        rep.record_array("v_pushes_standard", acc, w)
        coeffs = polys["vstar"][i]
        acc = arith.zeros(u.shape)
        power = Et_v
        for cf in coeffs:
            acc = acc + power * cf
            power = _col(matmul(dual.Astar, power.reshape(-1, 1)))
        rep.record_array("vstar_pushes_dual_standard", acc, wd)
    del zero
    return rep


# ---------------------------------------------------------------------------
# structural checks


def structural_checks(R: RestrictedModule, rep: AuditReport):
    arith, d = R.arith, R.d
    n = R.W.dim
    # E*_{r+i} A^h E*_{r+j} on W
    Ah = R.I
    powers = []
    for h in range(d + 1):
        powers.append(Ah)
        for i in range(d + 1):
            for j in range(d + 1):
                M = _mul(R.Es[i], Ah, R.Es[j])
                zero = arith.all_zero(M, max(1.0, max_abs(Ah)))
                if h < abs(i - j):
                    rep.record_flag("triple_product_zero", zero)
                elif h == abs(i - j):
                    rep.record_flag("triple_product_nonzero", not zero)
        Ah = matmul(Ah, R.A)
    # minimal polynomials on W
    M = R.I
    for th in R.theta:
        M = matmul(M, R.A - th * R.I)
    rep.record_array("min_poly_A", M, arith.zeros((n, n)), max_abs(R.A) ** (d + 1))
    M = R.I
    for th in R.theta_star:
        M = matmul(M, R.As - th * R.I)
    rep.record_array("min_poly_Astar", M, arith.zeros((n, n)), max_abs(R.As) ** (d + 1))
    # A^m E*_r A^n, 0 <= m, n <= d, span End(W)
    rows = []
    for a_pow in powers:
        left = matmul(a_pow, R.Es[0])
        for b_pow in powers:
            rows.append(matmul(left, b_pow).ravel())
    stack = np.array(rows, dtype=object if arith.exact else float)
    rep.record_flag("end_basis", rank(stack, arith) == (d + 1) ** 2)


# ---------------------------------------------------------------------------
# driver


def analyze_module(W: TModule, dual: DualData, sd: SpectralData) -> ModuleAnalysis:
    """Full matrix-side analysis of one thin module with d >= 1."""
    R = RestrictedModule(W, dual, sd)
    if R.d < 1:
        raise ModuleError("analysis needs d >= 1")
    arith = R.arith
    rep = AuditReport(arith)
    a, x, astar, xstar = trace_scalars(R, rep)
    m, mstar, nu, k, kstar = overlap_scalars(R, rep)
    bases = standard_bases(R, rep)
    reps, b, c, bstar, cstar = rep_matrices(R, bases, a, x, rep)
    one = arith.scalar(1)
    for i in range(1, R.d + 1):
        rep.record("k_recurrence", k[i] * c[i], k[i - 1] * b[i - 1])
        rep.record("kstar_recurrence", kstar[i] * cstar[i], kstar[i - 1] * bstar[i - 1])
        rep.record("xstar_is_bc", bstar[i - 1] * cstar[i], xstar[i])
    bp, cp, bsp, csp = one, one, one, one
    for i in range(R.d + 1):
        if i >= 1:
            bp, cp, bsp, csp = bp * b[i - 1], cp * c[i], bsp * bstar[i - 1], csp * cstar[i]
        rep.record("k_product_form", k[i], bp / cp)
        rep.record("kstar_product_form", kstar[i], bsp / csp)
    sc = ModuleScalars(R.d, a, astar, b, bstar, c, cstar, x, xstar, m, mstar, nu, k, kstar)
    split, pa = split_decomposition(R, bases, rep)
    polys = module_polynomials(sc, arith, R.theta[0], R.theta_star[0])
    last = polys["p"][R.d + 1]
    target = poly.from_roots(R.theta, one)
    rep.record_array("p_last_is_min_poly", list(last), list(target), max_abs(list(target)))
    inner_product_audit(R, bases, sc, polys, rep)
    structural_checks(R, rep)
    return ModuleAnalysis(W, sc, bases, split, pa, reps, polys, rep)
