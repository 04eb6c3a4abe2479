import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EXACT, FLOAT
from thinmod import families as fam
from thinmod.params import ParameterArray, derived_scalars, validate_parameter_array

F = Fraction
seeds = st.integers(min_value=0, max_value=2**32)
diameters = st.sampled_from([3, 4, 5])


def test_quadratic_roots():
    assert fam.quadratic_roots(F(5), F(6), EXACT) == (2, 3)
    lo, hi = fam.quadratic_roots(F(2), F(-1), EXACT)
    assert lo == pytest.approx(1 - 2**0.5) and hi == pytest.approx(1 + 2**0.5)
    assert fam.quadratic_roots(F(0), F(1), EXACT) == (-1j, 1j)


@settings(max_examples=20)
@given(seeds, diameters)
def test_q_racah_round_trip(seed, D):
    c, pa = fam.random_q_racah(random.Random(seed), D, EXACT)
    fit = fam.fit_q_racah(pa.theta, pa.theta_star, EXACT, pa.varphi, pa.phi)
    assert (fit.q, fit.h, fit.hstar, fit.s, fit.sstar) == (c["q"], c["h"], c["hstar"], c["s"], c["sstar"])
    assert {fit.r1, fit.r2} == {c["r1"], c["r2"]}
    assert fit.audit.passed
    _, ints, rep = fam.family_audit("qracah", fit, pa, EXACT)
    assert rep.passed, rep.failures()
    assert rep.max_residual == 0


@settings(max_examples=15)
@given(seeds, diameters)
def test_inverse_q_representative_describes_the_same_array(seed, D):
    c, pa = fam.random_q_racah(random.Random(seed), D, EXACT)
    fit = fam.fit_q_racah(pa.theta, pa.theta_star, EXACT, pa.varphi, pa.phi, prefer_large=False)
    assert abs(fit.q) < 1 and fit.q == 1 / c["q"]
    for i in range(D + 1):
        assert fam.q_racah_theta(fit, i) == pa.theta[i]
        assert fam.q_racah_theta_star(fit, i) == pa.theta_star[i]
    assert fam.family_audit("qracah", fit, pa, EXACT)[2].passed


@settings(max_examples=15)
@given(seeds, diameters)
def test_q_racah_eigenvalue_differences(seed, D):
    _, pa = fam.random_q_racah(random.Random(seed), D, EXACT)
    fit = fam.fit_q_racah(pa.theta, pa.theta_star, EXACT)
    q, h, s = fit.q, fit.h, fit.s
    for i in range(D + 1):
        for j in range(D + 1):
            assert pa.theta[i] - pa.theta[j] == h * (q**i - q**j) * (s * q - q ** (-i - j))


def test_hypergeometric_sums_start_at_one():
    _, pa = fam.random_q_racah(random.Random(1), 4, EXACT)
    fit = fam.fit_q_racah(pa.theta, pa.theta_star, EXACT, pa.varphi, pa.phi)
    mod = fam.q_racah_module_params(fit, pa, EXACT)
    assert all(fam.q_racah_u_eval(fit, mod, i, 0, EXACT) == 1 for i in range(5))
    assert all(fam.q_racah_u_eval(fit, mod, 0, j, EXACT) == 1 for j in range(5))


def test_q_racah_float_fit_matches():
    c, pa = fam.random_q_racah(random.Random(3), 3, EXACT)
    fl = pa.convert(FLOAT)
    fit = fam.fit_q_racah(fl.theta, fl.theta_star, FLOAT, fl.varphi, fl.phi)
    assert fit.q == pytest.approx(float(c["q"]))
    assert fit.s == pytest.approx(float(c["s"]))
    assert fam.family_audit("qracah", fit, fl, FLOAT)[2].passed


@pytest.mark.parametrize("theta", [(3, 1, -1, -3), (0, 1, 2, 3), (0, 1, 4, 9)])
def test_q_racah_rejects_linear_and_quadratic_sequences(theta):
    with pytest.raises(fam.NotOfType):
        fam.fit_q_racah(theta, theta, EXACT)


def test_q_racah_rejects_non_recurrent_sequence():
    with pytest.raises(fam.NotOfType):
        fam.fit_q_racah((0, 1, 3, 10, 11), (0, 1, 3, 7, 15), EXACT)


def test_classical_3_2_1_6():
    b_seq, c_seq, pa = fam.generate_classical(3, 2, 1, 6, EXACT)
    assert b_seq == (42, 30, 12, 0) and c_seq == (0, 1, 6, 28)
    assert pa.theta == (42, 14, 0, -7)
    assert validate_parameter_array(pa, EXACT).ok
    ds = derived_scalars(pa, EXACT)
    assert ds.b == b_seq and ds.c == c_seq
    fit = fam.fit_classical(pa.theta, pa.theta_star, b_seq, c_seq, EXACT, pa.varphi, pa.phi)
    assert (fit.b, fit.alpha, fit.sigma) == (2, 1, 6)
    assert fam.classical_c(3, fit.b, fit.alpha, 1) == 1
    _, _, rep = fam.family_audit("classical", fit, pa, EXACT)
    assert rep.passed, rep.failures()


@settings(max_examples=20)
@given(seeds, diameters, st.booleans())
def test_classical_round_trip(seed, D, h_zero):
    c, b_seq, c_seq, pa = fam.random_classical(random.Random(seed), D, EXACT, h_zero=h_zero)
    fit = fam.fit_classical(pa.theta, pa.theta_star, b_seq, c_seq, EXACT, pa.varphi, pa.phi)
    assert (fit.b, fit.alpha, fit.sigma) == (c["b"], c["alpha"], c["sigma"])
    # h vanishes exactly when sigma (b - 1) + alpha does; h_zero forces that
    assert (fit.h == 0) == (c["sigma"] * (c["b"] - 1) + c["alpha"] == 0)
    assert fit.h == 0 or not h_zero
    assert fit.hstar == fam.classical_hstar_closed(D, fit.b, fit.mu, fit.h)
    assert fit.tau == fam.classical_tau_closed(fit.b, fit.mu, fit.hstar)
    assert fit.theta_star0 == fam.classical_theta_star0_closed(D, fit.b, fit.alpha, fit.sigma, fit.hstar)
    _, _, rep = fam.family_audit("classical", fit, pa, EXACT)
    assert rep.passed, rep.failures()
    for i in range(D + 1):
        for j in range(D + 1):
            lhs = pa.theta[i] - pa.theta[j]
            assert lhs == (fit.b**i - fit.b**j) * (fit.mu - fit.h * fit.b ** (-i - j))


def test_classical_rejects_unit_base():
    # the cube has classical parameters with b = 1, outside the b != 1 family
    with pytest.raises(fam.NotOfType):
        fam.fit_classical((3, 1, -1, -3), (3, 1, -1, -3), (3, 2, 1, 0), (0, 1, 2, 3), EXACT)


def test_classical_rejects_bad_intersection_numbers():
    b_seq, c_seq, pa = fam.generate_classical(3, 2, 1, 6, EXACT)
    broken = c_seq[:3] + (c_seq[3] + 1,)
    with pytest.raises(fam.NotOfType):
        fam.fit_classical(pa.theta, pa.theta_star, b_seq, broken, EXACT)


def test_trivial_module_of_a_standalone_array():
    _, pa = fam.random_q_racah(random.Random(7), 3, EXACT)
    shifted = ParameterArray(1, 0, pa.d, pa.theta, pa.theta_star, pa.varphi, pa.phi)
    fit = fam.fit_q_racah(pa.theta, pa.theta_star, EXACT, pa.varphi, pa.phi)
    mod = fam.q_racah_module_params(fit, shifted, EXACT)
    assert mod.r == 1 and mod.audit is not None
