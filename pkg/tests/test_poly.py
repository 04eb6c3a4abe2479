from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from thinmod import poly

fracs = st.fractions(min_value=-5, max_value=5, max_denominator=7)


def test_from_roots_and_evaluate():
    p = poly.from_roots([1, 2, 3], Fraction(1))
    assert p == (-6, 11, -6, 1)
    assert [poly.evaluate(p, x) for x in (1, 2, 3, 4)] == [0, 0, 0, 6]


def test_trim_and_degree():
    assert poly.trim((1, 2, 0, 0)) == (1, 2)
    assert poly.degree((0, 0)) == -1
    assert poly.degree((3, 0, 5)) == 2
    assert poly.pad((1,), 3) == (1, 0, 0)


@given(st.lists(fracs, min_size=1, max_size=5), st.lists(fracs, min_size=1, max_size=5), fracs)
def test_ring_operations_commute_with_evaluation(p, q, x):
    assert poly.evaluate(poly.add(p, q), x) == poly.evaluate(p, x) + poly.evaluate(q, x)
    assert poly.evaluate(poly.sub(p, q), x) == poly.evaluate(p, x) - poly.evaluate(q, x)
    assert poly.evaluate(poly.scale(p, 3), x) == 3 * poly.evaluate(p, x)


@given(st.lists(fracs, min_size=1, max_size=5), fracs, fracs)
def test_times_linear(p, root, x):
    assert poly.evaluate(poly.times_linear(p, root), x) == (x - root) * poly.evaluate(p, x)


def test_three_term_recurrence_gives_chebyshev_like_sequence():
    # x p_i = p_{i+1} + a_i p_i + x_i p_{i-1} with a = 0, x_i = 1
    seq = poly.three_term([0, 0, 0, 0], [0, 1, 1, 1], Fraction(1), 4)
    assert seq[0] == (1,)
    assert seq[1] == (0, 1)
    assert seq[2] == (-1, 0, 1)
    assert seq[3] == (0, -2, 0, 1)
