import itertools
from fractions import Fraction

import pytest

from thinmod import graphs
from thinmod.kernel import Arith, IrrationalSpectrum, matmul
from thinmod.scheme import (check_multiplicity_formula, krein_parameters, primitive_idempotents,
                            q_polynomial_orderings)

EXACT = Arith(True)
FLOAT = Arith(False)


def spectral(g, arith):
    dd = graphs.distance_data(g)
    inn = graphs.verify_distance_regular(dd)
    return primitive_idempotents(dd, inn, arith)


@pytest.mark.parametrize(
    "g, theta, m",
    [
        (graphs.hypercube(3), (3, 1, -1, -3), (1, 3, 3, 1)),
        (graphs.johnson(6, 3), (9, 3, -1, -3), (1, 5, 9, 5)),
        (graphs.hamming(4, 2), (4, 2, 0, -2, -4), (1, 4, 6, 4, 1)),
        (graphs.johnson(5, 2), (6, 1, -2), (1, 4, 5)),
    ],
)
def test_eigenvalues_and_multiplicities(g, theta, m):
    sd = spectral(g, EXACT)
    assert sd.theta == theta and sd.m == m
    fl = spectral(g, FLOAT)
    assert all(abs(a - b) < 1e-9 for a, b in zip(fl.theta, theta))


def test_idempotents_are_orthogonal_projections():
    sd = spectral(graphs.hypercube(3), EXACT)
    for i, j in itertools.product(range(4), repeat=2):
        prod = matmul(sd.E[i], sd.E[j])
        want = sd.E[i] if i == j else sd.arith.zeros(prod.shape)
        assert all(x == 0 for x in (prod - want).ravel())


def test_irrational_spectrum_in_exact_mode():
    with pytest.raises(IrrationalSpectrum):
        spectral(graphs.dodecahedron(), EXACT)


@pytest.mark.parametrize(
    "g, orderings",
    [
        (graphs.hypercube(3), [(0, 1, 2, 3)]),
        (graphs.hamming(4, 2), [(0, 1, 2, 3, 4), (0, 3, 2, 1, 4)]),
        (graphs.johnson(6, 3), [(0, 1, 2, 3), (0, 3, 2, 1)]),
        (graphs.complete_multipartite(3, 2), [(0, 1, 2)]),
    ],
)
def test_q_polynomial_orderings(g, orderings):
    sd = spectral(g, EXACT)
    kd = krein_parameters(sd)
    assert q_polynomial_orderings(kd, EXACT, sd.n) == orderings


def test_dodecahedron_has_no_q_polynomial_ordering():
    sd = spectral(graphs.dodecahedron(), FLOAT)
    assert q_polynomial_orderings(krein_parameters(sd), FLOAT, sd.n) == []


def test_cube_dual_intersection_numbers():
    sd = spectral(graphs.hypercube(3), EXACT)
    kd = krein_parameters(sd)
    assert kd.cstar == (0, 1, 2, 3) and kd.bstar == (3, 2, 1, 0) and kd.astar == (0, 0, 0, 0)
    assert check_multiplicity_formula(kd, sd)


def test_johnson_dual_numbers_are_rational():
    sd = spectral(graphs.johnson(6, 3), EXACT)
    kd = krein_parameters(sd)
    assert kd.cstar == (0, 1, Fraction(20, 9), 5)
    assert kd.bstar == (5, 4, Fraction(25, 9), 0)


@pytest.mark.parametrize("g", [graphs.hypercube(3), graphs.johnson(5, 2), graphs.hamming(3, 3)])
def test_krein_parameters_are_nonnegative_and_symmetric(g):
    sd = spectral(g, EXACT)
    q = krein_parameters(sd).q
    size = q.shape[0]
    for h, i, j in itertools.product(range(size), repeat=3):
        assert q[h, i, j] >= 0
        assert q[h, i, j] == q[h, j, i]
        # m_h q^h_ij is symmetric in all three indices
        assert sd.m[h] * q[h, i, j] == sd.m[i] * q[i, h, j]
