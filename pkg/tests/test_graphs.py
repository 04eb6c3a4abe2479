import pytest
from hypothesis import given
from hypothesis import strategies as st

from thinmod import graphs
from thinmod.graphs import (DisconnectedGraphError, GraphFormatError, NotDistanceRegularError, distance_data,
                            format_graph, parse_graph, verify_distance_regular)


def numbers(g):
    return verify_distance_regular(distance_data(g))


@pytest.mark.parametrize(
    "g, b, c",
    [
        (graphs.hypercube(3), (3, 2, 1, 0), (0, 1, 2, 3)),
        (graphs.hamming(4, 2), (4, 3, 2, 1, 0), (0, 1, 2, 3, 4)),
        (graphs.johnson(6, 3), (9, 4, 1, 0), (0, 1, 4, 9)),
        (graphs.dodecahedron(), (3, 2, 1, 1, 1, 0), (0, 1, 1, 1, 2, 3)),
        (graphs.cycle_graph(7), (2, 1, 1, 0), (0, 1, 1, 1)),
        (graphs.complete_graph(5), (4, 0), (0, 1)),
    ],
)
def test_intersection_arrays(g, b, c):
    inn = numbers(g)
    assert inn.b == b and inn.c == c
    k = inn.valency
    assert all(ci + ai + bi == k for ci, ai, bi in zip(inn.c, inn.a, inn.b))
    assert sum(inn.k) == g.n


def test_path_is_not_distance_regular():
    with pytest.raises(NotDistanceRegularError):
        numbers(graphs.path_graph(4))


def test_parse_round_trip():
    g = graphs.johnson(5, 2)
    again = parse_graph(format_graph(g, comment="J(5,2)"))
    assert again == g


@pytest.mark.parametrize(
    "text",
    ["", "3 1\n0 0\n", "3 2\n0 1\n", "3 1\n0 5\n", "x y\n", "2 1\n0 1 2\n", "3 2\n0 1\n0 1\n"],
)
def test_parse_errors(text):
    with pytest.raises(GraphFormatError):
        parse_graph(text)


def test_disconnected_graph_is_rejected():
    with pytest.raises(DisconnectedGraphError):
        parse_graph("4 2\n0 1\n2 3\n")


@given(st.integers(min_value=2, max_value=4), st.integers(min_value=2, max_value=3))
def test_hamming_valencies_are_binomial(D, q):
    from math import comb

    inn = numbers(graphs.hamming(D, q))
    assert inn.k == tuple(comb(D, i) * (q - 1) ** i for i in range(D + 1))
