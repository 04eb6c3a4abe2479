from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thinmod.kernel import (Arith, ContractError, IrrationalSpectrum, dot, eig_sym, intersect, inverse,
                            matmul, matrix_poly_eval, nullspace, orbit_span, rank, rationalize, sign_normalize,
                            solve, span, sum_spaces, to_fraction)

EXACT = Arith(True)
FLOAT = Arith(False)

small_ints = st.integers(min_value=-5, max_value=5)


def test_to_fraction_reads_strings_and_floats():
    assert to_fraction("3/4") == Fraction(3, 4)
    assert to_fraction(" −2 ") == -2
    assert to_fraction(0.5) == Fraction(1, 2)
    with pytest.raises(ContractError):
        to_fraction(float("nan"))
    with pytest.raises(ContractError):
        to_fraction(object())


def test_float_comparisons_scale_with_magnitude():
    assert FLOAT.same(1e6, 1e6 + 1e-4)
    assert not FLOAT.same(1.0, 1.0 + 1e-6)
    assert FLOAT.is_zero(1e-10)
    assert EXACT.is_zero(Fraction(0)) and not EXACT.is_zero(Fraction(1, 10**30))


def test_exact_matmul_matches_integer_product():
    X = EXACT.array([[1, 2], [3, 4]])
    Y = EXACT.array([["1/2", 0], [0, "1/3"]])
    assert matmul(X, Y).tolist() == [[Fraction(1, 2), Fraction(2, 3)], [Fraction(3, 2), Fraction(4, 3)]]


def test_matmul_handles_huge_entries():
    big = 10**40
    X = EXACT.array([[big, 1], [1, big]])
    assert matmul(X, X)[0, 0] == big * big + 1


def test_rank_and_nullspace_of_singular_matrix(arith=EXACT):
    M = EXACT.array([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
    assert rank(M, EXACT) == 2
    K = nullspace(M, EXACT)
    assert K.shape == (3, 1)
    assert all(x == 0 for x in matmul(M, K).ravel())
    assert rank(M.astype(float), FLOAT) == 2


@given(st.lists(small_ints, min_size=9, max_size=9), st.lists(small_ints, min_size=3, max_size=3))
def test_exact_solve_round_trip(entries, rhs):
    M = EXACT.array(np.array(entries).reshape(3, 3))
    if rank(M, EXACT) < 3:
        with pytest.raises(ContractError):
            solve(M, EXACT.array(rhs), EXACT)
        return
    x = solve(M, EXACT.array(rhs), EXACT)
    assert list(matmul(M, x.reshape(-1, 1)).ravel()) == [Fraction(v) for v in rhs]
    assert all(x == 0 for x in (matmul(M, inverse(M, EXACT)) - EXACT.eye(3)).ravel())


def test_eig_sym_exact_and_float_agree():
    M = [[2, 1, 0], [1, 2, 0], [0, 0, 1]]
    ex = eig_sym(EXACT.array(M), EXACT)
    fl = eig_sym(np.array(M, dtype=float), FLOAT)
    assert [lam for lam, _ in ex] == [3, 1]
    assert [S.dim for _, S in ex] == [1, 2]
    assert [round(lam, 12) for lam, _ in fl] == [3.0, 1.0]


def test_eig_sym_reports_irrational_spectrum():
    with pytest.raises(IrrationalSpectrum):
        eig_sym(EXACT.array([[0, 1], [1, 1]]), EXACT)
    with pytest.raises(ContractError):
        eig_sym(EXACT.array([[0, 1], [0, 0]]), EXACT)


def test_subspace_operations():
    e = EXACT.eye(4)
    S = span([e[:, 0], e[:, 1]], EXACT)
    T = span([e[:, 1] + e[:, 2], e[:, 0]], EXACT)
    assert intersect(S, T).dim == 1
    assert sum_spaces([S, T], EXACT, 4).dim == 3
    assert S.contains(e[:, 0] * 3 - e[:, 1])
    assert not S.contains(e[:, 2])
    B = S.basis
    assert dot(B[:, 0], B[:, 1]) == 0


def test_span_of_nothing_needs_ambient():
    with pytest.raises(ContractError):
        span([], EXACT)
    assert span([], EXACT, ambient=3).dim == 0


def test_matrix_poly_eval_is_horner():
    M = EXACT.array([[1, 1], [0, 1]])
    # 1 - 2x + x^2 = (x - 1)^2 kills the Jordan block
    assert all(x == 0 for x in matrix_poly_eval([1, -2, 1], M, EXACT).ravel())


def test_orbit_span_reaches_whole_cycle():
    P = EXACT.array(np.roll(np.eye(5, dtype=int), 1, axis=0))
    v = EXACT.array([1, 0, 0, 0, 0])
    assert orbit_span(v, [P], EXACT).dim == 5


def test_rationalize_and_sign_normalize():
    assert rationalize([0.3333333333333333])[0] == Fraction(1, 3)
    v = sign_normalize(np.array([0.5, -2.0, 2.0]))
    assert v.tolist() == [-0.5, 2.0, -2.0]
