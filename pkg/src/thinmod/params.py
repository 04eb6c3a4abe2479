"""Scalars and polynomials of a thin module computed from its parameter array.

Indices are relative to the module: ``theta[i]`` is the eigenvalue
theta_{t+i} and ``theta_star[i]`` is theta*_{r+i}.  Split sequences are
stored 0-based, so ``varphi[i - 1]`` holds varphi_i.

Sequences indexed from 1 in the usual notation (c_i, x_i) are stored with a
zero placeholder in position 0, and sequences that stop at d-1 (b_i) carry a
trailing zero, matching :class:`thinmod.graphs.IntersectionNumbers`.

Wherever two closed forms exist for the same quantity both are evaluated
and compared; a disagreement raises :class:`FormulaMismatch`.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import poly
from .kernel import Arith, ContractError, max_abs


class ParameterArrayError(ValueError):
    """Malformed parameter array input (wrong lengths, unreadable numbers)."""


class FormulaMismatch(ArithmeticError):
    """Two closed forms for the same quantity disagree."""

    def __init__(self, name: str, index, lhs, rhs):
        self.name = name
        self.index = index
        super().__init__(f"{name}[{index}]: {lhs} != {rhs}")


class Incomparable(ValueError):
    """Parameter arrays with different eigenvalue data cannot be compared."""


# ---------------------------------------------------------------------------
# the array itself


@dataclass(frozen=True)
class ParameterArray:
    r: int
    t: int
    d: int
    theta: tuple
    theta_star: tuple
    varphi: tuple
    phi: tuple
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.d < 0:
            raise ParameterArrayError("d must be nonnegative")
        for name, seq, size in (
            ("theta", self.theta, self.d + 1),
            ("theta_star", self.theta_star, self.d + 1),
            ("varphi", self.varphi, self.d),
            ("phi", self.phi, self.d),
        ):
            if len(seq) != size:
                raise ParameterArrayError(f"{name} has length {len(seq)}, expected {size}")

    def convert(self, arith: Arith) -> "ParameterArray":
        conv = lambda seq: tuple(arith.scalar(x) for x in seq)  # noqa: E731
        return ParameterArray(self.r, self.t, self.d, conv(self.theta), conv(self.theta_star),
                              conv(self.varphi), conv(self.phi), dict(self.extra))

    def with_changes(self, **changes) -> "ParameterArray":
        data = dict(r=self.r, t=self.t, d=self.d, theta=self.theta, theta_star=self.theta_star,
                    varphi=self.varphi, phi=self.phi, extra=dict(self.extra))
        data.update(changes)
        return ParameterArray(**data)

    @classmethod
    def from_dict(cls, data: dict, arith: Arith) -> "ParameterArray":
        known = ("r", "t", "d", "theta", "theta_star", "varphi", "phi")
        missing = [k for k in known if k not in data]
        if missing:
            raise ParameterArrayError(f"missing fields: {', '.join(missing)}")
        try:
            ints = [int(data[k]) for k in ("r", "t", "d")]
            seqs = [tuple(arith.scalar(x) for x in data[k]) for k in known[3:]]
        except (TypeError, ValueError, ZeroDivisionError, ContractError) as exc:
            raise ParameterArrayError(str(exc)) from None
        extra = {k: v for k, v in data.items() if k not in known}
        return cls(*ints, *seqs, extra=extra)

    @classmethod
    def from_json(cls, text: str, arith: Arith) -> "ParameterArray":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterArrayError(f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ParameterArrayError("top level must be an object")
        return cls.from_dict(data, arith)

    def to_dict(self) -> dict:
        out: dict[str, Any] = dict(self.extra)
        out.update(
            r=self.r, t=self.t, d=self.d,
            theta=[encode_number(x) for x in self.theta],
            theta_star=[encode_number(x) for x in self.theta_star],
            varphi=[encode_number(x) for x in self.varphi],
            phi=[encode_number(x) for x in self.phi],
        )
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def encode_number(x) -> str:
    """Decimal string: ``p/q`` for rationals, shortest round-trip repr for floats."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


# ---------------------------------------------------------------------------
# tau / eta helpers


def tau_at(seq: Sequence, i: int, x):
    """prod_{h<i} (x - seq[h])."""
    out = x * 0 + 1
    for h in range(i):
        out = out * (x - seq[h])
    return out


def eta_at(seq: Sequence, i: int, x):
    """prod_{h<i} (x - seq[d-h]) with d = len(seq) - 1."""
    d = len(seq) - 1
    out = x * 0 + 1
    for h in range(i):
        out = out * (x - seq[d - h])
    return out


def _prod(xs, one):
    out = one
    for x in xs:
        out = out * x
    return out


def _ratio_sum(theta, i):
    """sum_{h<i} (theta_h - theta_{d-h}) / (theta_0 - theta_d)."""
    d = len(theta) - 1
    acc = theta[0] * 0
    for h in range(i):
        acc = acc + (theta[h] - theta[d - h]) / (theta[0] - theta[d])
    return acc


def varphi_from_phi(theta, theta_star, phi) -> tuple:
    """First split sequence from phi_1 and the eigenvalues."""
    d = len(theta) - 1
    return tuple(
        phi[0] * _ratio_sum(theta, i) + (theta_star[i] - theta_star[0]) * (theta[i - 1] - theta[d])
        for i in range(1, d + 1)
    )


def phi_from_varphi(theta, theta_star, varphi) -> tuple:
    """Second split sequence from varphi_1 and the eigenvalues."""
    d = len(theta) - 1
    return tuple(
        varphi[0] * _ratio_sum(theta, i) + (theta_star[i] - theta_star[0]) * (theta[d - i + 1] - theta[0])
        for i in range(1, d + 1)
    )


def beta_values(seq: Sequence) -> list:
    """(s_{i-2} - s_{i+1}) / (s_{i-1} - s_i) - 1 for 2 <= i <= d-1."""
    return [(seq[i - 2] - seq[i + 1]) / (seq[i - 1] - seq[i]) - 1 for i in range(2, len(seq) - 1)]


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Problem:
    code: str
    index: int | tuple | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[Problem, ...]

    @property
    def ok(self) -> bool:
        return not self.problems

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(p.message for p in self.problems)


def validate_parameter_array(pa: ParameterArray, arith: Arith) -> ValidationReport:
    """Check the conditions that make the data the parameter array of a Leonard system.

    Distinct eigenvalues and dual eigenvalues, nonzero split sequences,
    each split sequence recomputed from the other, and (for d >= 3) a common
    constant beta for both eigenvalue sequences.
    """
    pa = pa.convert(arith)
    d, th, ths = pa.d, pa.theta, pa.theta_star
    problems: list[Problem] = []
    for name, seq in (("theta", th), ("theta_star", ths)):
        for i in range(d + 1):
            for j in range(i + 1, d + 1):
                if arith.same(seq[i], seq[j]):
                    problems.append(Problem(f"{name}_repeated", (i, j), f"{name}[{i}] == {name}[{j}]"))
    for name, seq in (("varphi", pa.varphi), ("phi", pa.phi)):
        for i, x in enumerate(seq, start=1):
            if arith.is_zero(x):
                problems.append(Problem(f"{name}_zero", i, f"{name}_{i} is zero"))
    if problems or d == 0:
        return ValidationReport(tuple(problems))

    want_varphi = varphi_from_phi(th, ths, pa.phi)
    want_phi = phi_from_varphi(th, ths, pa.varphi)
    for i in range(d):
        if not arith.same(pa.varphi[i], want_varphi[i]):
            problems.append(Problem("varphi_relation", i + 1,
                                    f"varphi_{i + 1} = {pa.varphi[i]}, phi_1 predicts {want_varphi[i]}"))
        if not arith.same(pa.phi[i], want_phi[i]):
            problems.append(Problem("phi_relation", i + 1,
                                    f"phi_{i + 1} = {pa.phi[i]}, varphi_1 predicts {want_phi[i]}"))
    if d >= 3:
        betas = beta_values(th) + beta_values(ths)
        for k, b in enumerate(betas[1:], start=1):
            if not arith.same(b, betas[0]):
                problems.append(Problem("beta_not_constant", k,
                                        f"beta value {k} is {b}, expected {betas[0]}"))
    return ValidationReport(tuple(problems))


# ---------------------------------------------------------------------------
# derived scalars


class _Checker:
    """Records the largest deviation per named identity and fails on mismatch."""

    def __init__(self, arith: Arith, eps: float | None = None):
        self.arith = arith if eps is None else Arith(arith.exact, eps)
        self.residuals: dict[str, float] = {}

    def agree(self, name: str, lhs, rhs, start: int = 0, scale=None):
        arith = self.arith
        worst = self.residuals.get(name, 0.0)
        for k, (a, b) in enumerate(zip(lhs, rhs), start=start):
            dev = arith.deviation(a, b)
            local = scale if scale is not None else max(abs(a), abs(b))
            if not arith.exact:
                dev = dev / max(1.0, float(local))
            worst = max(worst, dev)
            if not arith.same(a, b, local):
                self.residuals[name] = worst
                raise FormulaMismatch(name, k, a, b)
        self.residuals[name] = worst


@dataclass(frozen=True)
class DerivedScalars:
    """Per-module scalars computed from closed forms.

    ``c``, ``cstar``, ``x`` and ``xstar`` carry a zero at index 0; ``b`` and
    ``bstar`` carry a zero at index d.  ``residuals`` records the largest
    (relative, in float mode) disagreement between alternative forms.
    """

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
    nu: Any
    k: tuple
    kstar: tuple
    residuals: dict = field(default_factory=dict, compare=False)


def _a_forms(th, ths, varphi, phi):
    d = len(th) - 1
    first, second = [], []
    for i in range(d + 1):
        x = th[i]
        y = th[d - i]
        if i >= 1:
            x = x + varphi[i - 1] / (ths[i] - ths[i - 1])
            y = y + phi[i - 1] / (ths[i] - ths[i - 1])
        if i < d:
            x = x + varphi[i] / (ths[i] - ths[i + 1])
            y = y + phi[i] / (ths[i] - ths[i + 1])
        first.append(x)
        second.append(y)
    return first, second


def _astar_forms(th, ths, varphi, phi):
    d = len(th) - 1
    first, second = [], []
    for i in range(d + 1):
        x = ths[i]
        y = ths[d - i]
        if i >= 1:
            x = x + varphi[i - 1] / (th[i] - th[i - 1])
            y = y + phi[d - i] / (th[i] - th[i - 1])
        if i < d:
            x = x + varphi[i] / (th[i] - th[i + 1])
            y = y + phi[d - i - 1] / (th[i] - th[i + 1])
        first.append(x)
        second.append(y)
    return first, second


def _b_product(ths, varphi):
    """b_i = varphi_{i+1} tau*_i(theta*_i) / tau*_{i+1}(theta*_{i+1})."""
    d = len(ths) - 1
    return [varphi[i] * tau_at(ths, i, ths[i]) / tau_at(ths, i + 1, ths[i + 1]) for i in range(d)]


def _c_product(ths, phi_at):
    """c_i = phi_at(i) eta*_{d-i}(theta*_i) / eta*_{d-i+1}(theta*_{i-1})."""
    d = len(ths) - 1
    return [phi_at(i) * eta_at(ths, d - i, ths[i]) / eta_at(ths, d - i + 1, ths[i - 1])
            for i in range(1, d + 1)]


def _bc_rational(th, ths, a, varphi1):
    """Intersection numbers from varphi_1 and the diagonal entries a_i."""
    d = len(th) - 1
    b = [varphi1 / (ths[1] - ths[0])]
    c = []
    for i in range(1, d):
        common = (th[0] - th[1]) * (ths[0] - ths[i]) + varphi1
        b.append(((th[0] - a[i]) * (ths[i] - ths[i - 1]) + common) / (ths[i + 1] - ths[i - 1]))
        c.append(((th[0] - a[i]) * (ths[i] - ths[i + 1]) + common) / (ths[i - 1] - ths[i + 1]))
    c.append((varphi1 + (th[1] - th[0]) * (ths[d] - ths[0])) / (ths[d - 1] - ths[d]))
    return b, c


def _bc_closed(th, ths, varphi1):
    """Intersection numbers from varphi_1 and the eigenvalues only (d >= 2)."""
    d = len(th) - 1
    b = [varphi1 / (ths[1] - ths[0])]
    c = []
    for i in range(1, d):
        out = []
        for sign in (+1, -1):
            nb = ths[i - sign]
            f = ths[1] - nb - (ths[i] - ths[0]) * (ths[1] - ths[d - 1]) / (ths[d] - ths[0])
            g = (ths[i] - ths[0]) * ((th[2] - th[1]) * (ths[i] - ths[d]) - (th[1] - th[0]) * (nb - ths[d - 1]))
            far = ths[i + sign]
            out.append((varphi1 * f + g) / ((far - ths[i]) * (far - nb)))
        b.append(out[0])
        c.append(out[1])
    c.append((varphi1 + (th[1] - th[0]) * (ths[d] - ths[0])) / (ths[d - 1] - ths[d]))
    return b, c


def _bc_two_by_two(th, ths, varphi1, varphi2):
    """Solve the two linear relations satisfied by (c_i, b_i) for 1 <= i <= d-1."""
    d = len(th) - 1
    b, c = [], []
    for i in range(1, d):
        h = lambda lam: (lam - ths[i]) * (lam + ths[i] - ths[1] - ths[0])  # noqa: E731
        m11, m12 = ths[i - 1] - ths[i], ths[i + 1] - ths[i]
        m21, m22 = h(ths[i - 1]), h(ths[i + 1])
        r1 = varphi1 + (th[1] - th[0]) * (ths[i] - ths[0])
        r2 = varphi2 * (ths[i] - ths[0]) + (th[2] - th[0]) * (ths[i] - ths[0]) * (ths[i] - ths[1])
        det = m11 * m22 - m12 * m21
        c.append((r1 * m22 - m12 * r2) / det)
        b.append((m11 * r2 - m21 * r1) / det)
    return b, c


def _varphi2_forms(th, ths, varphi1):
    d = len(th) - 1
    from_theta = (
        varphi1 * (1 + (th[1] - th[d - 1]) / (th[0] - th[d]))
        + (ths[1] - ths[0]) * (th[d] + th[d - 1] - th[0] - th[1])
        + (ths[2] - ths[0]) * (th[1] - th[d])
    )
    from_theta_star = (
        varphi1 * (1 + (ths[1] - ths[d - 1]) / (ths[0] - ths[d]))
        + (th[1] - th[0]) * (ths[d] + ths[d - 1] - ths[0] - ths[1])
        + (th[2] - th[0]) * (ths[1] - ths[d])
    )
    return from_theta, from_theta_star


def _split_from_diagonals(th, ths, a, astar):
    """Both split sequences recovered from the diagonal entries, four ways each."""
    d = len(th) - 1
    forms = {k: [] for k in ("varphi_a_low", "varphi_a_high", "varphi_astar_low", "varphi_astar_high",
                             "phi_a_low", "phi_a_high", "phi_astar_low", "phi_astar_high")}
    for i in range(1, d + 1):
        forms["varphi_a_low"].append((ths[i] - ths[i - 1]) * sum((th[j] - a[j] for j in range(i)), th[0] * 0))
        forms["varphi_a_high"].append((ths[i - 1] - ths[i]) * sum((th[j] - a[j] for j in range(i, d + 1)), th[0] * 0))
        forms["varphi_astar_low"].append((th[i] - th[i - 1]) * sum((ths[j] - astar[j] for j in range(i)), th[0] * 0))
        forms["varphi_astar_high"].append(
            (th[i - 1] - th[i]) * sum((ths[j] - astar[j] for j in range(i, d + 1)), th[0] * 0))
        forms["phi_a_low"].append((ths[i] - ths[i - 1]) * sum((th[d - j] - a[j] for j in range(i)), th[0] * 0))
        forms["phi_a_high"].append(
            (ths[i - 1] - ths[i]) * sum((th[d - j] - a[j] for j in range(i, d + 1)), th[0] * 0))
        forms["phi_astar_low"].append(
            (th[d - i] - th[d - i + 1]) * sum((ths[j] - astar[d - j] for j in range(i)), th[0] * 0))
        forms["phi_astar_high"].append(
            (th[d - i + 1] - th[d - i]) * sum((ths[j] - astar[d - j] for j in range(i, d + 1)), th[0] * 0))
    return forms


def derived_scalars(pa: ParameterArray, arith: Arith, check_validity: bool = True) -> DerivedScalars:
    """All per-module scalars from the closed forms, with cross-checks between forms."""
    pa = pa.convert(arith)
    if check_validity:
        report = validate_parameter_array(pa, arith)
        if not report.ok:
            raise ParameterArrayError(f"invalid parameter array: {report}")
    d, th, ths, vp, ph = pa.d, pa.theta, pa.theta_star, pa.varphi, pa.phi
    zero, one = arith.scalar(0), arith.scalar(1)
    chk = _Checker(arith)
    if d == 0:
        return DerivedScalars(0, (th[0],), (ths[0],), (zero,), (zero,), (zero,), (zero,), (zero,), (zero,),
                              (one,), (one,), one, (one,), (one,), {})

    a, a_alt = _a_forms(th, ths, vp, ph)
    chk.agree("a_two_forms", a, a_alt)
    astar, astar_alt = _astar_forms(th, ths, vp, ph)
    chk.agree("astar_two_forms", astar, astar_alt)
    chk.agree("a_sum", [sum(a, zero)], [sum(th, zero)])
    chk.agree("astar_sum", [sum(astar, zero)], [sum(ths, zero)])

    b = _b_product(ths, vp)
    bstar = _b_product(th, vp)
    c = _c_product(ths, lambda i: ph[i - 1])
    cstar = _c_product(th, lambda i: ph[d - i])

    b2, c2 = _bc_rational(th, ths, a, vp[0])
    chk.agree("b_product_vs_rational", b, b2)
    chk.agree("c_product_vs_rational", c, c2, start=1)
    bs2, cs2 = _bc_rational(ths, th, astar, vp[0])
    chk.agree("bstar_product_vs_rational", bstar, bs2)
    chk.agree("cstar_product_vs_rational", cstar, cs2, start=1)

    if d >= 2:
        b3, c3 = _bc_closed(th, ths, vp[0])
        chk.agree("b_product_vs_closed", b, b3)
        chk.agree("c_product_vs_closed", c, c3, start=1)
        bs3, cs3 = _bc_closed(ths, th, vp[0])
        chk.agree("bstar_product_vs_closed", bstar, bs3)
        chk.agree("cstar_product_vs_closed", cstar, cs3, start=1)
        v2_theta, v2_theta_star = _varphi2_forms(th, ths, vp[0])
        chk.agree("varphi2_forms", [vp[1], vp[1]], [v2_theta, v2_theta_star])
        b4, c4 = _bc_two_by_two(th, ths, vp[0], vp[1])
        chk.agree("b_product_vs_linear_system", b[1:d], b4, start=1)
        chk.agree("c_product_vs_linear_system", c[:d - 1], c4, start=1)

    b_full = tuple(b) + (zero,)
    c_full = (zero,) + tuple(c)
    bstar_full = tuple(bstar) + (zero,)
    cstar_full = (zero,) + tuple(cstar)
    chk.agree("row_sums", [c_full[i] + a[i] + b_full[i] for i in range(d + 1)], [th[0]] * (d + 1))
    chk.agree("row_sums_star", [cstar_full[i] + astar[i] + bstar_full[i] for i in range(d + 1)],
              [ths[0]] * (d + 1))

    # x_i, x*_i
    x = [vp[i - 1] * ph[i - 1] * tau_at(ths, i - 1, ths[i - 1]) * eta_at(ths, d - i, ths[i])
         / (tau_at(ths, i, ths[i]) * eta_at(ths, d - i + 1, ths[i - 1])) for i in range(1, d + 1)]
    xstar = [vp[i - 1] * ph[d - i] * tau_at(th, i - 1, th[i - 1]) * eta_at(th, d - i, th[i])
             / (tau_at(th, i, th[i]) * eta_at(th, d - i + 1, th[i - 1])) for i in range(1, d + 1)]
    chk.agree("x_vs_bc", x, [b[i - 1] * c[i - 1] for i in range(1, d + 1)], start=1)
    chk.agree("xstar_vs_bc", xstar, [bstar[i - 1] * cstar[i - 1] for i in range(1, d + 1)], start=1)

    # nu, k_i, k*_i
    phi_prod = _prod(ph, one)
    nu = eta_at(th, d, th[0]) * eta_at(ths, d, ths[0]) / phi_prod
    k = [_prod(vp[:i], one) / _prod(ph[:i], one) * eta_at(ths, d, ths[0])
         / (tau_at(ths, i, ths[i]) * eta_at(ths, d - i, ths[i])) for i in range(d + 1)]
    kstar = [_prod(vp[:i], one) / _prod(ph[d - i:], one) * eta_at(th, d, th[0])
             / (tau_at(th, i, th[i]) * eta_at(th, d - i, th[i])) for i in range(d + 1)]
    k_bc = [_prod(b[:i], one) / _prod(c[:i], one) for i in range(d + 1)]
    kstar_bc = [_prod(bstar[:i], one) / _prod(cstar[:i], one) for i in range(d + 1)]
    chk.agree("k_vs_bc", k, k_bc)
    chk.agree("kstar_vs_bc", kstar, kstar_bc)
    chk.agree("k_sum", [sum(k, zero), sum(kstar, zero)], [nu, nu])
    m = [ks / nu for ks in kstar]
    mstar = [kk / nu for kk in k]

    # round trips back to the split sequences
    for name, seq in _split_from_diagonals(th, ths, a, astar).items():
        chk.agree(name, seq, vp if name.startswith("varphi") else ph, start=1)
    chk.agree("split_relation_varphi", vp, varphi_from_phi(th, ths, ph), start=1)
    chk.agree("split_relation_phi", ph, phi_from_varphi(th, ths, vp), start=1)
    chk.agree("split_endpoints", [ph[0], ph[d - 1], vp[d - 1]], [
        vp[0] + (ths[1] - ths[0]) * (th[d] - th[0]),
        vp[0] + (ths[d] - ths[0]) * (th[1] - th[0]),
        ph[0] + (ths[d] - ths[0]) * (th[d - 1] - th[d]),
    ])
    # a_i, b_i, c_i against the first two tau* sums
    lhs1, rhs1, lhs2, rhs2 = [], [], [], []
    for i in range(d + 1):
        prev_ = ths[i - 1] if i >= 1 else ths[0]
        next_ = ths[i + 1] if i < d else ths[0]
        lhs1.append(c_full[i] * tau_at(ths, 1, prev_) + a[i] * tau_at(ths, 1, ths[i])
                    + b_full[i] * tau_at(ths, 1, next_))
        rhs1.append(vp[0] + th[1] * tau_at(ths, 1, ths[i]))
        if d >= 2:
            lhs2.append(c_full[i] * tau_at(ths, 2, prev_) + a[i] * tau_at(ths, 2, ths[i])
                        + b_full[i] * tau_at(ths, 2, next_))
            rhs2.append(vp[1] * tau_at(ths, 1, ths[i]) + th[2] * tau_at(ths, 2, ths[i]))
    chk.agree("tau1_relation", lhs1, rhs1)
    chk.agree("tau2_relation", lhs2, rhs2)

    return DerivedScalars(
        d, tuple(a), tuple(astar), b_full, bstar_full, c_full, cstar_full,
        (zero,) + tuple(x), (zero,) + tuple(xstar), tuple(m), tuple(mstar), nu, tuple(k), tuple(kstar),
        dict(chk.residuals),
    )


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class PolynomialSequence:
    """Coefficient tuples (lowest degree first) of the module polynomials.

    ``p`` and ``pstar`` run over 0..d+1; the others over 0..d.
    """

    p: tuple
    pstar: tuple
    u: tuple
    ustar: tuple
    v: tuple
    vstar: tuple
    tau: tuple
    taustar: tuple
    eta: tuple
    etastar: tuple
    residuals: dict = field(default_factory=dict, compare=False)


def _poly_agree(chk: _Checker, name: str, P: Sequence, Q: Sequence):
    for i, (p, q) in enumerate(zip(P, Q)):
        n = max(len(p), len(q))
        p, q = poly.pad(p, n), poly.pad(q, n)
        scale = max(max(abs(x) for x in p), max(abs(x) for x in q))
        chk.agree(name, p, q, start=0, scale=scale)


def _scaled_recurrence(a, up, down, one, d):
    """lambda w_i = down_i w_{i-1} + a_i w_i + up_i w_{i+1}, w_0 = 1, solved for w_{i+1}."""
    out = [(one,)]
    for i in range(d):
        nxt = poly.times_linear(out[i], a[i])
        if i >= 1:
            nxt = poly.sub(nxt, poly.scale(poly.pad(out[i - 1], len(nxt)), down[i]))
        out.append(poly.scale(nxt, 1 / up[i]))
    return out


def polynomial_sequences(pa: ParameterArray, ds: DerivedScalars, arith: Arith,
                         coefficient_eps: float | None = None) -> PolynomialSequence:
    """Build every polynomial twice (recurrence and split-basis expansion) and compare."""
    pa = pa.convert(arith)
    d, th, ths, vp, ph = pa.d, pa.theta, pa.theta_star, pa.varphi, pa.phi
    one = arith.scalar(1)
    chk = _Checker(arith, coefficient_eps)
    tau = [poly.from_roots(th[:i], one) for i in range(d + 1)]
    taustar = [poly.from_roots(ths[:i], one) for i in range(d + 1)]
    eta = [poly.from_roots(th[::-1][:i], one) for i in range(d + 1)]
    etastar = [poly.from_roots(ths[::-1][:i], one) for i in range(d + 1)]

    p = poly.three_term(ds.a, ds.x, one, d + 2)
    pstar = poly.three_term(ds.astar, ds.xstar, one, d + 2)
    _poly_agree(chk, "p_last_is_min_poly", [p[d + 1]], [poly.from_roots(th, one)])
    _poly_agree(chk, "pstar_last_is_min_poly", [pstar[d + 1]], [poly.from_roots(ths, one)])

    p_at_0 = [poly.evaluate(p[i], th[0]) for i in range(d + 1)]
    pstar_at_0 = [poly.evaluate(pstar[i], ths[0]) for i in range(d + 1)]
    c_prod = [_prod(ds.c[1:i + 1], one) for i in range(d + 1)]
    cstar_prod = [_prod(ds.cstar[1:i + 1], one) for i in range(d + 1)]
    u = [poly.scale(p[i], 1 / p_at_0[i]) for i in range(d + 1)]
    ustar = [poly.scale(pstar[i], 1 / pstar_at_0[i]) for i in range(d + 1)]
    v = [poly.scale(p[i], 1 / c_prod[i]) for i in range(d + 1)]
    vstar = [poly.scale(pstar[i], 1 / cstar_prod[i]) for i in range(d + 1)]

    # second recurrences, written directly for u and v
    if d >= 1:
        _poly_agree(chk, "u_recurrence", u, _scaled_recurrence(ds.a, ds.b, ds.c, one, d))
        _poly_agree(chk, "ustar_recurrence", ustar, _scaled_recurrence(ds.astar, ds.bstar, ds.cstar, one, d))
        _poly_agree(chk, "v_recurrence", v, _scaled_recurrence(ds.a, ds.c[1:] + (ds.c[0],), ds.b[-1:] + ds.b[:-1], one, d))
        _poly_agree(chk, "vstar_recurrence", vstar,
                    _scaled_recurrence(ds.astar, ds.cstar[1:] + (ds.cstar[0],), ds.bstar[-1:] + ds.bstar[:-1], one, d))

    # expansions in the tau and eta bases
    u_tau, ustar_tau, p_tau, p_eta, pstar_tau, pstar_eta, u_eta = [], [], [], [], [], [], []
    for i in range(d + 1):
        acc_u, acc_us, acc_pt, acc_pe, acc_pst, acc_pse = ((one * 0,),) * 6
        vp_i, ph_i, phd_i = _prod(vp[:i], one), _prod(ph[:i], one), _prod(ph[d - i:], one)
        ts_i, t_i = tau_at(ths, i, ths[i]), tau_at(th, i, th[i])
        for h in range(i + 1):
            vp_h, ph_h, phd_h = _prod(vp[:h], one), _prod(ph[:h], one), _prod(ph[d - h:], one)
            ts_h, t_h = tau_at(ths, h, ths[i]), tau_at(th, h, th[i])
            acc_u = poly.add(acc_u, poly.scale(tau[h], ts_h / vp_h))
            acc_us = poly.add(acc_us, poly.scale(taustar[h], t_h / vp_h))
            acc_pt = poly.add(acc_pt, poly.scale(tau[h], vp_i * ts_h / (vp_h * ts_i)))
            acc_pe = poly.add(acc_pe, poly.scale(eta[h], ph_i * ts_h / (ph_h * ts_i)))
            acc_pst = poly.add(acc_pst, poly.scale(taustar[h], vp_i * t_h / (vp_h * t_i)))
            acc_pse = poly.add(acc_pse, poly.scale(etastar[h], phd_i * t_h / (phd_h * t_i)))
        u_tau.append(acc_u)
        ustar_tau.append(acc_us)
        p_tau.append(acc_pt)
        p_eta.append(acc_pe)
        pstar_tau.append(acc_pst)
        pstar_eta.append(acc_pse)
        u_eta.append(poly.scale(acc_pe, ts_i / vp_i))
    _poly_agree(chk, "u_tau_expansion", u, u_tau)
    _poly_agree(chk, "ustar_tau_expansion", ustar, ustar_tau)
    _poly_agree(chk, "p_tau_expansion", p[:d + 1], p_tau)
    _poly_agree(chk, "p_eta_expansion", p[:d + 1], p_eta)
    _poly_agree(chk, "pstar_tau_expansion", pstar[:d + 1], pstar_tau)
    _poly_agree(chk, "pstar_eta_expansion", pstar[:d + 1], pstar_eta)
    _poly_agree(chk, "u_eta_expansion", u, u_eta)

    # normalisations
    chk.agree("p_at_theta0_vs_b", p_at_0, [_prod(ds.b[:i], one) for i in range(d + 1)])
    chk.agree("pstar_at_theta0_vs_bstar", pstar_at_0, [_prod(ds.bstar[:i], one) for i in range(d + 1)])
    chk.agree("p_at_theta0_closed", p_at_0, [_prod(vp[:i], one) / tau_at(ths, i, ths[i]) for i in range(d + 1)])
    chk.agree("pstar_at_theta0_closed", pstar_at_0,
              [_prod(vp[:i], one) / tau_at(th, i, th[i]) for i in range(d + 1)])
    for name, seq, at, want in (
        ("p_at_thetad_closed", p, th[d], [_prod(ph[:i], one) / tau_at(ths, i, ths[i]) for i in range(d + 1)]),
        ("pstar_at_thetad_closed", pstar, ths[d],
         [_prod(ph[d - i:], one) / tau_at(th, i, th[i]) for i in range(d + 1)]),
        ("u_at_thetad", u, th[d], [_prod(ph[:i], one) / _prod(vp[:i], one) for i in range(d + 1)]),
        ("v_at_theta0", v, th[0], ds.k),
        ("vstar_at_theta0", vstar, ths[0], ds.kstar),
    ):
        for i in range(d + 1):
            chk.agree(name, [poly.evaluate(seq[i], at)], [want[i]], start=i,
                      scale=max(poly.magnitude(seq[i], at), abs(float(want[i]))))
    for name, seq in (("p", p), ("pstar", pstar), ("tau", tau), ("eta", eta)):
        for i, q in enumerate(seq):
            if poly.degree(q) != i or q[-1] != 1:
                raise FormulaMismatch(f"{name}_monic_degree", i, poly.degree(q), i)

    return PolynomialSequence(
        tuple(p), tuple(pstar), tuple(u), tuple(ustar), tuple(v), tuple(vstar),
        tuple(tau), tuple(taustar), tuple(eta), tuple(etastar), dict(chk.residuals),
    )


# ---------------------------------------------------------------------------
# audits


@dataclass
class AuditReport:
    """Largest absolute residual per identity, with the magnitude it is judged against."""

    arith: Arith
    residuals: dict = field(default_factory=dict)
    scales: dict = field(default_factory=dict)
    flags: set = field(default_factory=set)

    def record(self, name: str, lhs, rhs, scale=None):
        dev = self.arith.deviation(lhs, rhs)
        size = max(abs(float(lhs)), abs(float(rhs)), 0.0 if scale is None else abs(float(scale)))
        self._update(name, dev, size)

    def record_array(self, name: str, M, N, scale=None):
        M, N = np.asarray(M), np.asarray(N)
        size = max(max_abs(M), max_abs(N), 0.0 if scale is None else abs(float(scale)))
        self._update(name, max_abs(M - N), size)

    def record_flag(self, name: str, ok: bool):
        """A yes/no condition, stored as residual 0 (holds) or 1 (fails)."""
        self._update(name, 0.0 if ok else 1.0, 0.0, flag=True)

    def _update(self, name: str, dev: float, size: float, flag: bool = False):
        self.residuals[name] = max(self.residuals.get(name, 0.0), dev)
        self.scales[name] = max(self.scales.get(name, 0.0), size)
        if flag:
            self.flags.add(name)

    def merge(self, other: "AuditReport", prefix: str = ""):
        for name, dev in other.residuals.items():
            self._update(prefix + name, dev, other.scales.get(name, 0.0), name in other.flags)

    def failures(self) -> list[str]:
        bad = []
        for name, dev in self.residuals.items():
            if name in self.flags or self.arith.exact:
                if dev != 0:
                    bad.append(name)
            elif dev > self.arith.eps * max(1.0, self.scales.get(name, 0.0)):
                bad.append(name)
        return bad

    @property
    def passed(self) -> bool:
        return not self.failures()

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def max_relative(self) -> float:
        return max((dev / max(1.0, self.scales[name]) for name, dev in self.residuals.items()), default=0.0)


def _grid(seq_polys, points):
    return [[poly.evaluate(q, x) for x in points] for q in seq_polys]


def duality_audit(pa: ParameterArray, ds: DerivedScalars, ps: PolynomialSequence, arith: Arith) -> AuditReport:
    """Askey-Wilson duality in three normalisations plus the difference equations."""
    pa = pa.convert(arith)
    d, th, ths = pa.d, pa.theta, pa.theta_star
    rep = AuditReport(arith)
    U = _grid(ps.u, th)        # U[i][j] = u_i(theta_j)
    Us = _grid(ps.ustar, ths)  # Us[j][i] = u*_j(theta*_i)
    Pv = _grid(ps.p, th)
    Psv = _grid(ps.pstar, ths)
    V = _grid(ps.v, th)
    Vs = _grid(ps.vstar, ths)
    for i in range(d + 1):
        for j in range(d + 1):
            rep.record("aw_u", U[i][j], Us[j][i])
            rep.record("aw_p", Pv[i][j] / Pv[i][0], Psv[j][i] / Psv[j][0])
            rep.record("aw_v", V[i][j] / ds.k[i], Vs[j][i] / ds.kstar[j])

    zero = arith.scalar(0)
    for i in range(d + 1):
        for j in range(d + 1):
            # difference equation in i for u*_j at the dual eigenvalues
            lo = Us[j][i - 1] if i >= 1 else zero
            hi = Us[j][i + 1] if i < d else zero
            terms = (ds.b[i] * hi, ds.a[i] * Us[j][i], ds.c[i] * lo)
            rep.record("difference_eq", th[j] * Us[j][i], sum(terms, zero), _mag(terms))
            lo = U[j][i - 1] if i >= 1 else zero
            hi = U[j][i + 1] if i < d else zero
            terms = (ds.bstar[i] * hi, ds.astar[i] * U[j][i], ds.cstar[i] * lo)
            rep.record("difference_eq_dual", ths[j] * U[j][i], sum(terms, zero), _mag(terms))
            # three-term recurrence at the eigenvalues, with u_{d+1} = 0
            lo = U[i - 1][j] if i >= 1 else zero
            hi = U[i + 1][j] if i < d else zero
            terms = (ds.c[i] * lo, ds.a[i] * U[i][j], ds.b[i] * hi)
            rep.record("three_term", th[j] * U[i][j], sum(terms, zero), _mag(terms))
            lo = Us[i - 1][j] if i >= 1 else zero
            hi = Us[i + 1][j] if i < d else zero
            terms = (ds.cstar[i] * lo, ds.astar[i] * Us[i][j], ds.bstar[i] * hi)
            rep.record("three_term_dual", ths[j] * Us[i][j], sum(terms, zero), _mag(terms))
    return rep


def _mag(terms) -> float:
    return max((abs(float(x)) for x in terms), default=0.0)


def p_matrices(pa: ParameterArray, ps: PolynomialSequence, arith: Arith):
    """P_ij = v_j(theta_i) and P*_ij = v*_j(theta*_i)."""
    pa = pa.convert(arith)
    d = pa.d
    P = arith.zeros((d + 1, d + 1))
    Ps = arith.zeros((d + 1, d + 1))
    for i in range(d + 1):
        for j in range(d + 1):
            P[i, j] = poly.evaluate(ps.v[j], pa.theta[i])
            Ps[i, j] = poly.evaluate(ps.vstar[j], pa.theta_star[i])
    return P, Ps


def orthogonality_audit(pa: ParameterArray, ds: DerivedScalars, ps: PolynomialSequence, arith: Arith):
    """The twelve weighted orthogonality sums, P*P = nu I and the intertwining of P.

    Returns ``(report, P, Pstar)``.
    """
    pa = pa.convert(arith)
    d, th, ths = pa.d, pa.theta, pa.theta_star
    nu, k, ks = ds.nu, ds.k, ds.kstar
    zero, one = arith.scalar(0), arith.scalar(1)
    rep = AuditReport(arith)
    V = _grid(ps.v, th)          # V[i][h] = v_i(theta_h)
    Vs = _grid(ps.vstar, ths)
    U = _grid(ps.u, th)
    Us = _grid(ps.ustar, ths)
    Pp = _grid(ps.p[:d + 1], th)
    Ps = _grid(ps.pstar[:d + 1], ths)
    xprod = [_prod(ds.x[1:i + 1], one) for i in range(d + 1)]
    xsprod = [_prod(ds.xstar[1:i + 1], one) for i in range(d + 1)]
    rng = range(d + 1)

    def check(name, i, j, terms, diag_value):
        rhs = diag_value if i == j else zero
        rep.record(name, sum(terms, zero), rhs, _mag(terms))

    for i in rng:
        for j in rng:
            check("ortho_v_rows", i, j, [V[i][h] * V[j][h] * ks[h] for h in rng], nu * k[i])
            check("ortho_v_cols", i, j, [V[h][i] * V[h][j] / k[h] for h in rng], nu / ks[i])
            check("ortho_u_rows", i, j, [U[i][h] * U[j][h] * ks[h] for h in rng], nu / k[i])
            check("ortho_u_cols", i, j, [U[h][i] * U[h][j] * k[h] for h in rng], nu / ks[i])
            check("ortho_p_rows", i, j, [Pp[i][h] * Pp[j][h] * ks[h] for h in rng], nu * xprod[i])
            check("ortho_p_cols", i, j, [Pp[h][i] * Pp[h][j] / xprod[h] for h in rng], nu / ks[i])
            check("ortho_ustar_rows", i, j, [Us[i][h] * Us[j][h] * k[h] for h in rng], nu / ks[i])
            check("ortho_ustar_cols", i, j, [Us[h][i] * Us[h][j] * ks[h] for h in rng], nu / k[i])
            check("ortho_vstar_rows", i, j, [Vs[i][h] * Vs[j][h] * k[h] for h in rng], nu * ks[i])
            check("ortho_vstar_cols", i, j, [Vs[h][i] * Vs[h][j] / ks[h] for h in rng], nu / k[i])
            check("ortho_pstar_rows", i, j, [Ps[i][h] * Ps[j][h] * k[h] for h in rng], nu * xsprod[i])
            check("ortho_pstar_cols", i, j, [Ps[h][i] * Ps[h][j] / xsprod[h] for h in rng], nu / k[i])

    P, Pstar = p_matrices(pa, ps, arith)
    for i in rng:
        for j in rng:
            terms = [Pstar[i, h] * P[h, j] for h in rng]
            check("pstar_p_is_nu", i, j, terms, nu)
            # diag(theta) P = P A_flat and A*_sharp P = P diag(theta*)
            terms = [P[i, h] * _tridiag(ds.a, ds.b, ds.c, h, j) for h in rng]
            rep.record("p_intertwines_a", th[i] * P[i, j], sum(terms, zero), _mag(terms))
            terms = [_tridiag(ds.astar, ds.bstar, ds.cstar, i, h) * P[h, j] for h in rng]
            rep.record("p_intertwines_astar", P[i, j] * ths[j], sum(terms, zero), _mag(terms))
    return rep, P, Pstar


def _tridiag(a, b, c, i, j):
    """Entry (i, j) of the tridiagonal matrix with diagonal a, superdiagonal b, subdiagonal c."""
    if i == j:
        return a[i]
    if j == i + 1:
        return b[i]
    if j == i - 1:
        return c[i]
    return a[0] * 0


# ---------------------------------------------------------------------------
# isomorphism


def isomorphism_test(pa1: ParameterArray, pa2: ParameterArray, arith: Arith) -> bool:
    """Whether two thin modules with these parameter arrays are isomorphic.

    Both modules must come from the same graph and orderings: with equal
    (r, t, d) and eigenvalue data the class is fixed by varphi_1.
    """
    pa1, pa2 = pa1.convert(arith), pa2.convert(arith)
    for pa in (pa1, pa2):
        report = validate_parameter_array(pa, arith)
        if not report.ok:
            raise ParameterArrayError(f"invalid parameter array: {report}")
    if (pa1.r, pa1.t, pa1.d) != (pa2.r, pa2.t, pa2.d):
        return False
    if pa1.d == 0:
        return True
    same_data = all(arith.same(x, y) for x, y in zip(pa1.theta + pa1.theta_star, pa2.theta + pa2.theta_star))
    if not same_data:
        raise Incomparable("eigenvalue data differ; the arrays are not from a common graph and ordering")
    return arith.same(pa1.varphi[0], pa2.varphi[0])


# ---------------------------------------------------------------------------
# random valid arrays


_Q_CHOICES = (Fraction(2), Fraction(3), Fraction(-2), Fraction(1, 2), Fraction(3, 2), Fraction(-3))


def _random_rational(rng: random.Random, lo: int = -9, hi: int = 9, nonzero: bool = False) -> Fraction:
    while True:
        x = Fraction(rng.randint(lo, hi), rng.randint(1, 4))
        if x or not nonzero:
            return x


def _eigen_sequence(rng: random.Random, d: int, kind: str, q: Fraction) -> list[Fraction]:
    c0 = _random_rational(rng)
    c1 = _random_rational(rng, nonzero=True)
    c2 = _random_rational(rng)
    if kind == "quadratic":
        return [c0 + c1 * i + c2 * i * i for i in range(d + 1)]
    return [c0 + c1 * q**i + c2 * q ** (-i) for i in range(d + 1)]


def random_parameter_array(rng: random.Random, d: int, arith: Arith, max_tries: int = 1000) -> ParameterArray:
    """A random valid parameter array with rational entries.

    Both eigenvalue sequences share one recurrence shape (geometric with a
    common q, or quadratic); varphi_1 is random and the rest follows from
    the split relations.  Invalid draws are rejected.
    """
    one = Fraction(1)
    for _ in range(max_tries):
        kind = rng.choice(("geometric", "quadratic"))
        q = rng.choice(_Q_CHOICES)
        th = _eigen_sequence(rng, d, kind, q)
        ths = _eigen_sequence(rng, d, kind, q)
        if len(set(th)) != d + 1 or len(set(ths)) != d + 1:
            continue
        varphi1 = _random_rational(rng, nonzero=True)
        if d == 0:
            pa = ParameterArray(0, 0, 0, tuple(th), tuple(ths), (), ())
            return pa.convert(arith)
        phi1 = varphi1 + (ths[1] - ths[0]) * (th[d] - th[0])
        varphi = varphi_from_phi(th, ths, (phi1,))
        phi = phi_from_varphi(th, ths, (varphi1,))
        if any(x == 0 for x in varphi + phi):
            continue
        pa = ParameterArray(rng.randint(0, 2), rng.randint(0, 2), d, tuple(th), tuple(ths),
                            tuple(varphi), tuple(phi))
        if validate_parameter_array(pa, Arith(True)).ok:
            return pa.convert(arith)
    raise RuntimeError("no valid parameter array found")  # pragma: no cover


def cube_trivial_array(arith: Arith) -> ParameterArray:
    """Parameter array of the trivial module of the 3-cube."""
    return ParameterArray(0, 0, 3, (3, 1, -1, -3), (3, 1, -1, -3), (-6, -8, -6), (6, 8, 6)).convert(arith)
