"""q-Racah and classical-parameter families: fitting, generation, closed forms.

Both families are handled the same way.  A global fit recovers the family
constants from eigenvalue data, a per-module step recovers the one free
scalar tau(W) from varphi_1, and every other quantity of the module (split
sequences, intersection numbers, u_i on the eigenvalue grid) is then a
closed form to be compared against :mod:`thinmod.params`.

The two roots r1(W), r2(W) only ever enter through symmetric expressions,
so the formulas use their sum and product; the roots themselves are
reported for display and may be irrational or complex.
"""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .kernel import Arith
from .params import (AuditReport, ParameterArray, beta_values, derived_scalars, polynomial_sequences,
                     validate_parameter_array)
from . import poly


class NotOfType(ValueError):
    """The data does not have the shape of the requested family."""

    def __init__(self, reason: str, index=None):
        self.reason = reason
        self.index = index
        where = "" if index is None else f" (index {index})"
        super().__init__(reason + where)


class FamilyError(ArithmeticError):
    """A closed form hit a vanishing denominator."""


def _exact_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def quadratic_roots(total, product, arith: Arith) -> tuple:
    """Roots of lambda^2 - total*lambda + product, ascending by real part."""
    disc = total * total - 4 * product
    if arith.exact:
        root = _exact_sqrt(disc)
        if root is not None:
            return tuple(sorted(((total - root) / 2, (total + root) / 2)))
    disc = float(disc)
    if disc >= 0:
        root = math.sqrt(disc)
        return tuple(sorted(((float(total) - root) / 2, (float(total) + root) / 2)))
    root = cmath.sqrt(disc)
    return tuple(sorted(((float(total) - root) / 2, (float(total) + root) / 2), key=lambda z: (z.real, z.imag)))


def _div(num, den, arith: Arith, what: str, scale=1.0):
    if arith.is_zero(den, scale):
        raise FamilyError(f"vanishing denominator: {what}")
    return num / den


def _pochhammer(a, base, k: int, one):
    out = one
    for l in range(k):
        out = out * (1 - a * base**l)
    return out


def _check_distinct(seq, name: str, arith: Arith):
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if arith.same(seq[i], seq[j]):
                raise NotOfType(f"{name} entries {i} and {j} coincide", (i, j))


# ---------------------------------------------------------------------------
# q-Racah


@dataclass(frozen=True)
class QRacahFit:
    """Global q-Racah constants.  ``r_sum``/``r_product`` are absent without split data."""

    D: int
    q: object
    h: object
    hstar: object
    s: object
    sstar: object
    theta0: object
    theta_star0: object
    r_sum: object = None
    r_product: object = None
    r1: object = None
    r2: object = None
    exact: bool = True
    audit: AuditReport | None = field(default=None, compare=False)


@dataclass(frozen=True)
class QRacahModule:
    r: int
    t: int
    d: int
    tau: object
    r_sum: object
    r_product: object
    r1: object
    r2: object
    audit: AuditReport = field(compare=False)


def _geometric_offsets(seq, q, arith: Arith, name: str):
    """Solve seq_i = c0 + c1 q^i + c2 q^-i from i = 0, 1, 2; return (c0, c1, c2)."""
    one = arith.scalar(1)
    # seq_i - seq_0 = c1 (q^i - 1) + c2 (q^-i - 1)
    m11, m12 = q - one, one / q - one
    m21, m22 = q * q - one, one / (q * q) - one
    det = m11 * m22 - m12 * m21
    if arith.is_zero(det):
        raise NotOfType(f"{name}: degenerate q")
    y1, y2 = seq[1] - seq[0], seq[2] - seq[0]
    c1 = (y1 * m22 - m12 * y2) / det
    c2 = (m11 * y2 - m21 * y1) / det
    c0 = seq[0] - c1 - c2
    for i, x in enumerate(seq):
        if not arith.same(x, c0 + c1 * q**i + c2 * q ** (-i)):
            raise NotOfType(f"{name} is not of the form c0 + c1 q^i + c2 q^-i", i)
    return c0, c1, c2


def _solve_q(theta, theta_star, arith: Arith, prefer_large: bool) -> tuple:
    """q with q + 1/q = beta, and the arithmetic to use from here on."""
    betas = beta_values(theta) + beta_values(theta_star)
    for k, b in enumerate(betas[1:], start=1):
        if not arith.same(b, betas[0]):
            raise NotOfType("beta is not constant", k)
    beta = betas[0]
    disc = beta * beta - 4
    if arith.is_zero(disc, 4):
        raise NotOfType("beta = +-2 forces q = +-1")
    if float(disc) < 0:
        raise NotOfType("q is not real")
    root = _exact_sqrt(disc) if arith.exact else None
    if root is None:
        arith = Arith(False, arith.eps)
        root = math.sqrt(float(disc))
        beta = float(beta)
    big, small = (beta + root) / 2, (beta - root) / 2
    if abs(float(big)) < abs(float(small)):
        big, small = small, big
    return (big if prefer_large else small), arith


def fit_q_racah(theta: Sequence, theta_star: Sequence, arith: Arith, varphi: Sequence | None = None,
                phi: Sequence | None = None, prefer_large: bool = True) -> QRacahFit:
    """Recover (q, h, h*, s, s*) from eigenvalue data, and r1, r2 from split data when given.

    The canonical representative has |q| > 1; ``prefer_large=False`` picks
    the 1/q representative instead.  Irrational q switches to float.
    """
    D = len(theta) - 1
    if D < 3 or len(theta_star) != D + 1:
        raise NotOfType("need D >= 3 and sequences of equal length")
    theta = [arith.scalar(x) for x in theta]
    theta_star = [arith.scalar(x) for x in theta_star]
    _check_distinct(theta, "theta", arith)
    _check_distinct(theta_star, "theta_star", arith)
    q, work = _solve_q(theta, theta_star, arith, prefer_large)
    if work is not arith:
        theta = [float(x) for x in theta]
        theta_star = [float(x) for x in theta_star]
        varphi = None if varphi is None else [float(x) for x in varphi]
        phi = None if phi is None else [float(x) for x in phi]
    arith = work
    _, c1, c2 = _geometric_offsets(theta, q, arith, "theta")
    _, c1s, c2s = _geometric_offsets(theta_star, q, arith, "theta_star")
    if arith.is_zero(c2) or arith.is_zero(c1) or arith.is_zero(c2s) or arith.is_zero(c1s):
        raise NotOfType("h, h*, s or s* vanishes")
    h, s = c2, c1 / (c2 * q)
    hs, ss = c2s, c1s / (c2s * q)
    rep = AuditReport(arith)
    for i in range(D + 1):
        for j in range(D + 1):
            rep.record("theta_difference", theta[i] - theta[j], h * (q**i - q**j) * (s * q - q ** (-i - j)))
            rep.record("theta_star_difference", theta_star[i] - theta_star[j],
                       hs * (q**i - q**j) * (ss * q - q ** (-i - j)))
        rep.record("theta_form", theta[i], theta[0] + h * q ** (-i) * (1 - q**i) * (1 - s * q ** (i + 1)))
        rep.record("theta_star_form", theta_star[i],
                   theta_star[0] + hs * q ** (-i) * (1 - q**i) * (1 - ss * q ** (i + 1)))
    fit = QRacahFit(D, q, h, hs, s, ss, theta[0], theta_star[0], exact=arith.exact, audit=rep)
    if varphi is None:
        return fit
    if phi is None:
        raise ValueError("phi is required together with varphi")
    pa = ParameterArray(0, 0, D, tuple(theta), tuple(theta_star), tuple(varphi), tuple(phi))
    mod = q_racah_module_params(fit, pa, arith)
    rep.merge(mod.audit, "trivial.")
    for i in range(1, D + 1):
        # the global form, with r1 r2 = s s* q^{D+1}
        k = hs * h * q ** (1 - 2 * i) * (1 - q**i) * (1 - q ** (i - D - 1))
        rep.record("global_varphi", varphi[i - 1], k * (1 - mod.r_sum * q**i + mod.r_product * q ** (2 * i)))
        rep.record("global_phi", phi[i - 1],
                   k * (mod.r_product - mod.r_sum * ss * q**i + ss * ss * q ** (2 * i)) / ss)
    rep.record("r_product_global", mod.r_product, s * ss * q ** (D + 1))
    return QRacahFit(D, q, h, hs, s, ss, theta[0], theta_star[0], mod.r_sum, mod.r_product, mod.r1, mod.r2,
                     arith.exact, rep)


def q_racah_theta(fit: QRacahFit, i: int):
    q = fit.q
    return fit.theta0 + fit.h * q ** (-i) * (1 - q**i) * (1 - fit.s * q ** (i + 1))


def q_racah_theta_star(fit: QRacahFit, i: int):
    q = fit.q
    return fit.theta_star0 + fit.hstar * q ** (-i) * (1 - q**i) * (1 - fit.sstar * q ** (i + 1))


def q_racah_module_params(fit: QRacahFit, pa: ParameterArray, arith: Arith) -> QRacahModule:
    """tau(W) from varphi_1, then every split value of the module reproduced."""
    pa = pa.convert(arith)
    r, t, d = pa.r, pa.t, pa.d
    q, h, hs, s, ss = fit.q, fit.h, fit.hstar, fit.s, fit.sstar
    if d < 1:
        raise NotOfType("module of diameter 0 has no split data")
    rep = AuditReport(arith)
    for i in range(d + 1):
        rep.record("module_theta", pa.theta[i], q_racah_theta(fit, t + i))
        rep.record("module_theta_star", pa.theta_star[i], q_racah_theta_star(fit, r + i))
    lead = h * hs * (1 - q) * (1 - q**d)
    tau = _div(pa.varphi[0], lead, arith, "h h* (1-q)(1-q^d)") + s * ss * q ** (r + t + 2) + q ** (-r - t - 1 - d)
    total = tau * q ** (r + t + d)
    product = s * ss * q ** (2 * r + 2 * t + d + 1)
    for i in range(1, d + 1):
        k = h * hs * (1 - q**i) * (1 - q ** (d - i + 1))
        rep.record("varphi_tau_form", pa.varphi[i - 1],
                   k * (tau - s * ss * q ** (r + t + i + 1) - q ** (-r - t - i - d)))
        rep.record("phi_tau_form", pa.phi[i - 1],
                   k * (tau - ss * q ** (r - t - d + i) - s * q ** (t - r - i + 1)))
        k = h * hs * q ** (1 - 2 * i - t - r) * (1 - q**i) * (1 - q ** (i - d - 1))
        rep.record("varphi_root_form", pa.varphi[i - 1], k * (1 - total * q**i + product * q ** (2 * i)))
        y = ss * q ** (i + 2 * r)
        rep.record("phi_root_form", pa.phi[i - 1], k * (product - total * y + y * y) / (ss * q ** (2 * r)))
    r1, r2 = quadratic_roots(total, product, arith)
    if isinstance(r1, Fraction) or not arith.exact:
        if not isinstance(r1, complex):
            rep.record("root_sum", r1 + r2, total)
            rep.record("root_product", r1 * r2, product)
    return QRacahModule(r, t, d, tau, total, product, r1, r2, rep)


def q_racah_intersection_numbers(fit: QRacahFit, mod: QRacahModule, pa: ParameterArray, arith: Arith) -> dict:
    """Closed-form intersection numbers of the module and their duals.

    Arrays follow the :class:`thinmod.params.DerivedScalars` conventions.
    """
    pa = pa.convert(arith)
    out = {}
    out["b"], out["c"], out["a"] = _q_racah_bc(fit.q, fit.h, fit.sstar, mod.r, mod.t, mod.d,
                                               mod.r_sum, mod.r_product, pa.theta[0], arith)
    out["bstar"], out["cstar"], out["astar"] = _q_racah_bc(fit.q, fit.hstar, fit.s, mod.t, mod.r, mod.d,
                                                           mod.r_sum, mod.r_product, pa.theta_star[0], arith)
    return out


def _q_racah_bc(q, h, ss, r, t, d, total, product, theta_t, arith: Arith):
    zero = arith.scalar(0)
    one_minus = lambda y: 1 - total * y + product * y * y  # (1 - r1 y)(1 - r2 y)  # noqa: E731
    pair = lambda y: product - total * y + y * y  # (r1 - y)(r2 - y)  # noqa: E731
    lead = h * q ** (-t)
    b = [zero] * (d + 1)
    c = [zero] * (d + 1)
    b[0] = _div(lead * (1 - q ** (-d)) * one_minus(q), 1 - ss * q ** (2 * r + 2), arith, "1 - s* q^(2r+2)")
    for i in range(1, d):
        den = (1 - ss * q ** (2 * r + 2 * i + 1)) * (1 - ss * q ** (2 * r + 2 * i + 2))
        b[i] = _div(lead * (1 - q ** (i - d)) * (1 - ss * q ** (2 * r + i + 1)) * one_minus(q ** (i + 1)),
                    den, arith, f"b_{i} denominator")
        den = ss * q ** (2 * r + d) * (1 - ss * q ** (2 * r + 2 * i)) * (1 - ss * q ** (2 * r + 2 * i + 1))
        c[i] = _div(lead * (1 - q**i) * (1 - ss * q ** (2 * r + i + d + 1)) * pair(ss * q ** (2 * r + i)),
                    den, arith, f"c_{i} denominator")
    den = ss * q ** (2 * r + d) * (1 - ss * q ** (2 * r + 2 * d))
    c[d] = _div(lead * (1 - q**d) * pair(ss * q ** (2 * r + d)), den, arith, "c_d denominator")
    a = [theta_t - b[i] - c[i] for i in range(d + 1)]
    return tuple(b), tuple(c), tuple(a)


def q_racah_u_eval(fit: QRacahFit, mod: QRacahModule, i: int, j: int, arith: Arith):
    """u_i(theta_{t+j}) as a terminating 4phi3 sum."""
    q, s, ss = fit.q, fit.s, fit.sstar
    r, t, d = mod.r, mod.t, mod.d
    one = arith.scalar(1)
    tops = (q ** (-i), ss * q ** (2 * r + i + 1), q ** (-j), s * q ** (2 * t + j + 1))
    total = arith.scalar(0)
    for k in range(min(i, j) + 1):
        num = one
        for a in tops:
            num = num * _pochhammer(a, q, k, one)
        den = _pochhammer(q ** (-d), q, k, one) * _pochhammer(q, q, k, one)
        for l in range(k):
            y = q ** (l + 1)
            den = den * (1 - mod.r_sum * y + mod.r_product * y * y)
        total = total + _div(num, den, arith, f"4phi3 term {k}") * q**k
    return total


def generate_q_racah(q, h, hstar, s, sstar, r1, D: int, arith: Arith, theta0=0, theta_star0=0) -> ParameterArray:
    """Parameter array written straight from the q-Racah product forms."""
    q, h, hstar, s, sstar, r1 = (arith.scalar(x) for x in (q, h, hstar, s, sstar, r1))
    theta0, theta_star0 = arith.scalar(theta0), arith.scalar(theta_star0)
    r2 = s * sstar * q ** (D + 1) / r1
    theta = tuple(theta0 + h * q ** (-i) * (1 - q**i) * (1 - s * q ** (i + 1)) for i in range(D + 1))
    theta_star = tuple(theta_star0 + hstar * q ** (-i) * (1 - q**i) * (1 - sstar * q ** (i + 1))
                       for i in range(D + 1))
    varphi, phi = [], []
    for i in range(1, D + 1):
        k = h * hstar * q ** (1 - 2 * i) * (1 - q**i) * (1 - q ** (i - D - 1))
        varphi.append(k * (1 - r1 * q**i) * (1 - r2 * q**i))
        phi.append(k * (r1 - sstar * q**i) * (r2 - sstar * q**i) / sstar)
    return ParameterArray(0, 0, D, theta, theta_star, tuple(varphi), tuple(phi))


_Q_RACAH_Q = (Fraction(2), Fraction(3), Fraction(-2), Fraction(3, 2), Fraction(-3), Fraction(5, 2))


def _nonzero_rational(rng: random.Random, top: int = 9, den: int = 4) -> Fraction:
    while True:
        x = Fraction(rng.randint(-top, top), rng.randint(1, den))
        if x:
            return x


def random_q_racah(rng: random.Random, D: int, arith: Arith, max_tries: int = 1000):
    """Admissible q-Racah constants with |q| > 1 and their parameter array.

    Returns ``(constants, pa)``; draws whose array is not a valid
    parameter array are rejected.
    """
    for _ in range(max_tries):
        c = dict(q=rng.choice(_Q_RACAH_Q), h=_nonzero_rational(rng), hstar=_nonzero_rational(rng),
                 s=_nonzero_rational(rng, 5, 16), sstar=_nonzero_rational(rng, 5, 16),
                 r1=_nonzero_rational(rng, 9, 8), theta0=Fraction(rng.randint(-9, 9)),
                 theta_star0=Fraction(rng.randint(-9, 9)))
        pa = generate_q_racah(D=D, arith=Arith(True), **c)
        if not validate_parameter_array(pa, Arith(True)).ok:
            continue
        try:
            derived_scalars(pa, Arith(True))
        except (ArithmeticError, ValueError):
            continue
        c["r2"] = c["s"] * c["sstar"] * c["q"] ** (D + 1) / c["r1"]
        return c, pa.convert(arith)
    raise RuntimeError("no admissible q-Racah draw found")  # pragma: no cover


# ---------------------------------------------------------------------------
# classical parameters


@dataclass(frozen=True)
class ClassicalFit:
    D: int
    b: object
    alpha: object
    sigma: object
    eta: object
    mu: object
    h: object
    eta_star: object
    hstar: object
    theta_star0: object
    tau: object
    exact: bool = True
    audit: AuditReport | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ClassicalModule:
    r: int
    t: int
    d: int
    tau: object
    alpha: object
    sigma: object
    audit: AuditReport = field(compare=False)


def classical_c(D: int, b, alpha, i: int):
    return (b**i - 1) / (b - 1) * (1 + alpha * (b ** (i - 1) - 1) / (b - 1))


def classical_b(D: int, b, alpha, sigma, i: int):
    return (b**D - b**i) / (b - 1) * (sigma - alpha * (b**i - 1) / (b - 1))


def classical_eigen_constants(D: int, b, alpha, sigma):
    """(eta, mu, h) with theta_i = eta + mu b^i + h b^-i."""
    den = (b - 1) ** 2
    eta = ((sigma - 1) * (1 - b) - alpha * (b**D + 1)) / den
    mu = (alpha - b + 1) / den
    h = b**D * (sigma * b - sigma + alpha) / den
    return eta, mu, h


def classical_dual_constants(D: int, b, alpha, sigma, theta_star0):
    """(eta*, h*) with theta*_i = eta* + h* b^-i, given theta*_0."""
    bracket = ((sigma - alpha) * (b ** (D - 1) - 1) - b + 1 - sigma * (b**D - 1)) / (sigma * (b**D - 1))
    eta_star = theta_star0 * (1 + b / (b - 1) * bracket)
    return eta_star, theta_star0 - eta_star


def classical_hstar_closed(D: int, b, mu, h):
    return -(b ** (D - 1) * (mu * b * b - h) * (mu * b - h)) / (
        (mu * b ** (D + 1) - h) * (b ** (D - 1) + mu * (b - 1) * (b ** (D - 1) - 1)))


def classical_tau_closed(b, mu, hstar):
    return hstar * (1 + mu * b - mu) / (b * (b - 1))


def classical_theta_star0_closed(D: int, b, alpha, sigma, hstar):
    return hstar * sigma * (b**D - 1) * (1 - b) / (
        b * ((sigma - alpha) * (b ** (D - 1) - 1) - b + 1 - sigma * (b**D - 1)))


def fit_classical(theta: Sequence, theta_star: Sequence, b_seq: Sequence, c_seq: Sequence, arith: Arith,
                  varphi: Sequence | None = None, phi: Sequence | None = None) -> ClassicalFit:
    """Recover (b, alpha, sigma) and the eigenvalue constants.

    ``b_seq`` and ``c_seq`` use the DerivedScalars layout (b_D = 0, c_0 = 0).
    The base b comes from the geometric ratio of dual-eigenvalue gaps;
    alpha and sigma from c_2 and b_0.  Every input is then reproduced.
    """
    D = len(theta) - 1
    if D < 3 or len(theta_star) != D + 1:
        raise NotOfType("need D >= 3 and sequences of equal length")
    conv = lambda seq: [arith.scalar(x) for x in seq]  # noqa: E731
    theta, theta_star, b_seq, c_seq = conv(theta), conv(theta_star), conv(b_seq), conv(c_seq)
    _check_distinct(theta, "theta", arith)
    _check_distinct(theta_star, "theta_star", arith)
    ratios = [(theta_star[i + 1] - theta_star[i]) / (theta_star[i] - theta_star[i - 1]) for i in range(1, D)]
    for i, x in enumerate(ratios[1:], start=2):
        if not arith.same(x, ratios[0]):
            raise NotOfType("dual eigenvalue gaps are not geometric", i)
    if arith.is_zero(ratios[0]):
        raise NotOfType("dual eigenvalue gaps collapse")
    b = 1 / ratios[0]
    for bad in (-1, 0, 1):
        if arith.same(b, bad, 1):
            raise NotOfType(f"base b = {bad} is excluded")
    alpha = c_seq[2] / (b + 1) - 1
    sigma = b_seq[0] * (b - 1) / (b**D - 1)
    for i in range(1, D + 1):
        if not arith.same(c_seq[i], classical_c(D, b, alpha, i)):
            raise NotOfType("c_i does not have the classical shape", i)
    for i in range(D):
        if not arith.same(b_seq[i], classical_b(D, b, alpha, sigma, i)):
            raise NotOfType("b_i does not have the classical shape", i)
    eta, mu, h = classical_eigen_constants(D, b, alpha, sigma)
    for i in range(D + 1):
        if not arith.same(theta[i], eta + mu * b**i + h * b ** (-i)):
            raise NotOfType("eigenvalues do not follow the classical ordering", i)
    try:
        eta_star, hstar = classical_dual_constants(D, b, alpha, sigma, theta_star[0])
    except ZeroDivisionError:
        raise NotOfType("sigma (b^D - 1) vanishes") from None
    for i in range(D + 1):
        if not arith.same(theta_star[i], eta_star + hstar * b ** (-i)):
            raise NotOfType("dual eigenvalues do not follow the classical form", i)
    if arith.is_zero(hstar):
        raise NotOfType("h* vanishes")
    rep = AuditReport(arith)
    for i in range(D + 1):
        for j in range(D + 1):
            rep.record("theta_difference", theta[i] - theta[j], (b**i - b**j) * (mu - h * b ** (-i - j)))
            rep.record("theta_star_difference", theta_star[i] - theta_star[j],
                       hstar * b ** (-i - j) * (b**j - b**i))
    tau = classical_tau_closed(b, mu, hstar)
    try:
        rep.record("hstar_closed_form", hstar, classical_hstar_closed(D, b, mu, h))
        rep.record("theta_star0_closed_form", theta_star[0],
                   classical_theta_star0_closed(D, b, alpha, sigma, hstar))
    except ZeroDivisionError as exc:
        raise FamilyError(f"closed form for h* or theta*_0: {exc}") from None
    fit = ClassicalFit(D, b, alpha, sigma, eta, mu, h, eta_star, hstar, theta_star[0], tau, arith.exact, rep)
    # the trivial-module forms reproduce the graph's own intersection numbers
    triv = ClassicalModule(0, 0, D, tau, *classical_alpha_sigma(fit, 0, 0, D, tau), AuditReport(arith))
    ints = classical_intersection_numbers(fit, triv, theta[0], theta_star[0], arith)
    rep.record_array("trivial_c", ints["c"][1:], c_seq[1:])
    rep.record_array("trivial_b", ints["b"][:D], b_seq[:D])
    rep.record("trivial_cstar_1", ints["cstar"][1], 1)
    if varphi is not None:
        if phi is None:
            raise ValueError("phi is required together with varphi")
        for i in range(1, D + 1):
            k = (1 - b**i) * (1 - b ** (D - i + 1))
            rep.record("global_varphi", varphi[i - 1], k * (tau - h * hstar * b ** (-i - D)))
            rep.record("global_phi", phi[i - 1], k * (tau - hstar * mu * b ** (-i)))
    return fit


def classical_alpha_sigma(fit: ClassicalFit, r: int, t: int, d: int, tau) -> tuple:
    b = fit.b
    alpha = tau * b ** (r + 1) * (b - 1) ** 2 / fit.hstar
    sigma = (fit.h * b ** (-t) * (b - 1) ** 2 - alpha * b**d) / (b**d * (b - 1))
    return alpha, sigma


def classical_module_params(fit: ClassicalFit, pa: ParameterArray, arith: Arith) -> ClassicalModule:
    pa = pa.convert(arith)
    r, t, d = pa.r, pa.t, pa.d
    if d < 1:
        raise NotOfType("module of diameter 0 has no split data")
    b, h, hs, mu = fit.b, fit.h, fit.hstar, fit.mu
    rep = AuditReport(arith)
    for i in range(d + 1):
        rep.record("module_theta", pa.theta[i], fit.eta + mu * b ** (t + i) + h * b ** (-t - i))
        rep.record("module_theta_star", pa.theta_star[i], fit.eta_star + hs * b ** (-r - i))
    lead = (1 - b) * (1 - b**d)
    tau = _div(pa.varphi[0], lead, arith, "(1-b)(1-b^d)") + h * hs * b ** (-r - t - 1 - d)
    for i in range(1, d + 1):
        k = (1 - b**i) * (1 - b ** (d - i + 1))
        rep.record("varphi_tau_form", pa.varphi[i - 1], k * (tau - h * hs * b ** (-r - t - i - d)))
        rep.record("phi_tau_form", pa.phi[i - 1], k * (tau - hs * mu * b ** (-r + t - i)))
    if arith.is_zero(h):
        rep.record_flag("tau_nonzero_when_h_zero", arith.nonzero(tau))
    alpha, sigma = classical_alpha_sigma(fit, r, t, d, tau)
    return ClassicalModule(r, t, d, tau, alpha, sigma, rep)


def classical_intersection_numbers(fit: ClassicalFit, mod: ClassicalModule, theta_t, theta_star_r,
                                   arith: Arith) -> dict:
    b, h, hs, mu, tau = fit.b, fit.h, fit.hstar, fit.mu, mod.tau
    r, t, d = mod.r, mod.t, mod.d
    zero = arith.scalar(0)
    bb, cc, bs, cs = ([zero] * (d + 1) for _ in range(4))
    for i in range(d):
        bb[i] = b ** (r + 2 * i + 1) * (1 - b ** (d - i)) * (tau - h * hs * b ** (-r - t - i - d - 1)) / hs
    for i in range(1, d + 1):
        cc[i] = b ** (r + i) * (b**i - 1) * (tau - hs * mu * b ** (-r + t - i)) / hs
    gap = lambda e: mu * b**t - h * b ** (-t - e)  # noqa: E731  (mu b^t - h b^{-t-e})
    bs[0] = _div((b**d - 1) * (tau - h * hs * b ** (-r - t - d - 1)), gap(1), arith, "mu b^t - h b^(-t-1)")
    for i in range(1, d):
        bs[i] = _div(b ** (-i) * (b ** (d - i) - 1) * (tau - h * hs * b ** (-r - t - i - d - 1)) * gap(i),
                     gap(2 * i + 1) * gap(2 * i), arith, f"b*_{i} denominator")
        cs[i] = _div(b ** (d - 2 * i + 1) * (1 - b**i) * (tau - hs * mu * b ** (-r + t - d + i - 1)) * gap(i + d),
                     gap(2 * i) * gap(2 * i - 1), arith, f"c*_{i} denominator")
    cs[d] = _div(b ** (-d + 1) * (1 - b**d) * (tau - hs * mu * b ** (-r + t - 1)), gap(2 * d - 1), arith,
                 "c*_d denominator")
    return {
        "b": tuple(bb), "c": tuple(cc), "a": tuple(theta_t - bb[i] - cc[i] for i in range(d + 1)),
        "bstar": tuple(bs), "cstar": tuple(cs),
        "astar": tuple(theta_star_r - bs[i] - cs[i] for i in range(d + 1)),
    }


def classical_shape_check(fit: ClassicalFit, mod: ClassicalModule, ints: dict, rep: AuditReport):
    """c_i(W), b_i(W) against the alpha(W)/sigma(W) forms."""
    b, d = fit.b, mod.d
    for i in range(1, d + 1):
        rep.record("alpha_form_c", ints["c"][i],
                   (b**i - 1) / (b - 1) * (ints["c"][1] + mod.alpha * (b ** (i - 1) - 1) / (b - 1)))
    for i in range(d):
        rep.record("sigma_form_b", ints["b"][i],
                   (b**d - b**i) / (b - 1) * (mod.sigma - mod.alpha * (b**i - 1) / (b - 1)))


def classical_u_eval(fit: ClassicalFit, mod: ClassicalModule, i: int, j: int, arith: Arith):
    """u_i(theta_{t+j}) as a terminating 3phi2 sum (h != 0) or 2phi1 sum (h = 0)."""
    b, h, hs, mu, tau = fit.b, fit.h, fit.hstar, fit.mu, mod.tau
    r, t, d = mod.r, mod.t, mod.d
    one = arith.scalar(1)
    total = arith.scalar(0)
    if arith.nonzero(h):
        tops = (b ** (-i), b ** (-j), mu * b ** (2 * t + j) / h)
        bottoms = (b ** (-d), tau * b ** (r + t + d + 1) / (h * hs), b)
        z = b
    else:
        tops = (b ** (-i), b ** (-j))
        bottoms = (b ** (-d), b)
        z = _div(mu * hs * b ** (-r + t + j - d), tau, arith, "tau(W)")
    for k in range(min(i, j) + 1):
        num, den = one, one
        for a in tops:
            num = num * _pochhammer(a, b, k, one)
        for a in bottoms:
            den = den * _pochhammer(a, b, k, one)
        total = total + _div(num, den, arith, f"hypergeometric term {k}") * z**k
    return total


def generate_classical(D: int, b, alpha, sigma, arith: Arith):
    """Intersection numbers and trivial-module parameter array for classical parameters.

    theta*_0 and tau come from their closed forms, so the array carries
    the normalisation c*_1 = 1 of a genuine graph.  Returns
    ``(b_seq, c_seq, pa)`` in the DerivedScalars layout.
    """
    b, alpha, sigma = arith.scalar(b), arith.scalar(alpha), arith.scalar(sigma)
    zero = arith.scalar(0)
    c_seq = (zero,) + tuple(classical_c(D, b, alpha, i) for i in range(1, D + 1))
    b_seq = tuple(classical_b(D, b, alpha, sigma, i) for i in range(D)) + (zero,)
    eta, mu, h = classical_eigen_constants(D, b, alpha, sigma)
    hstar = classical_hstar_closed(D, b, mu, h)
    theta_star0 = classical_theta_star0_closed(D, b, alpha, sigma, hstar)
    eta_star = theta_star0 - hstar
    tau = classical_tau_closed(b, mu, hstar)
    theta = tuple(eta + mu * b**i + h * b ** (-i) for i in range(D + 1))
    theta_star = tuple(eta_star + hstar * b ** (-i) for i in range(D + 1))
    varphi = tuple((1 - b**i) * (1 - b ** (D - i + 1)) * (tau - h * hstar * b ** (-i - D)) for i in range(1, D + 1))
    phi = tuple((1 - b**i) * (1 - b ** (D - i + 1)) * (tau - hstar * mu * b ** (-i)) for i in range(1, D + 1))
    return b_seq, c_seq, ParameterArray(0, 0, D, theta, theta_star, varphi, phi)


def random_classical(rng: random.Random, D: int, arith: Arith, h_zero: bool = False, max_tries: int = 1000):
    """Random (b, alpha, sigma) with b in {2, 3, -2}; ``h_zero`` forces sigma b - sigma + alpha = 0.

    Returns ``(constants, b_seq, c_seq, pa)``.
    """
    for _ in range(max_tries):
        b = rng.choice((Fraction(2), Fraction(3), Fraction(-2)))
        sigma = _nonzero_rational(rng, 9, 3)
        alpha = sigma * (1 - b) if h_zero else Fraction(rng.randint(-6, 6), rng.randint(1, 3))
        try:
            b_seq, c_seq, pa = generate_classical(D, b, alpha, sigma, Arith(True))
        except ZeroDivisionError:
            continue
        if not validate_parameter_array(pa, Arith(True)).ok:
            continue
        try:
            derived_scalars(pa, Arith(True))
        except (ArithmeticError, ValueError):
            continue
        conv = lambda seq: tuple(arith.scalar(x) for x in seq)  # noqa: E731
        return dict(D=D, b=b, alpha=alpha, sigma=sigma), conv(b_seq), conv(c_seq), pa.convert(arith)
    raise RuntimeError("no admissible classical draw found")  # pragma: no cover


# ---------------------------------------------------------------------------
# module audit against the formula pipeline


INT_FIELDS = ("a", "b", "c", "astar", "bstar", "cstar")


def family_audit(kind: str, fit, pa: ParameterArray, arith: Arith) -> tuple[object, dict, AuditReport]:
    """Module parameters, closed-form intersection numbers and u grid, compared
    with :func:`thinmod.params.derived_scalars` and the recurrence polynomials.

    Returns ``(module_params, intersection_numbers, report)``.
    """
    if fit.exact != arith.exact:
        arith = Arith(fit.exact, arith.eps)
    pa = pa.convert(arith)
    ds = derived_scalars(pa, arith)
    ps = polynomial_sequences(pa, ds, arith)
    if kind == "qracah":
        mod = q_racah_module_params(fit, pa, arith)
        ints = q_racah_intersection_numbers(fit, mod, pa, arith)
        u_eval = lambda i, j: q_racah_u_eval(fit, mod, i, j, arith)  # noqa: E731
    elif kind == "classical":
        mod = classical_module_params(fit, pa, arith)
        ints = classical_intersection_numbers(fit, mod, pa.theta[0], pa.theta_star[0], arith)
        u_eval = lambda i, j: classical_u_eval(fit, mod, i, j, arith)  # noqa: E731
    else:
        raise ValueError(f"unknown family {kind!r}")
    rep = AuditReport(arith)
    rep.merge(mod.audit)
    if kind == "classical":
        classical_shape_check(fit, mod, ints, rep)
    d = pa.d
    for name in INT_FIELDS:
        ours, theirs = ints[name], getattr(ds, name)
        lo, hi = (1, d + 1) if name.startswith("c") else (0, d if name.startswith("b") else d + 1)
        for i in range(lo, hi):
            rep.record(f"{name}_matches_engine", ours[i], theirs[i])
    for i in range(d + 1):
        for j in range(d + 1):
            want = poly.evaluate(ps.u[i], pa.theta[j])
            rep.record("u_hypergeometric", u_eval(i, j), want, poly.magnitude(ps.u[i], pa.theta[j]))
    return mod, ints, rep
