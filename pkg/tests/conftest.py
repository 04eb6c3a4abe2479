from __future__ import annotations

import functools
from dataclasses import dataclass

import pytest
from hypothesis import settings

from thinmod import graphs
from thinmod.kernel import Arith
from thinmod.scheme import krein_parameters, primitive_idempotents, q_polynomial_orderings
from thinmod.terwilliger import decompose_standard_module, dual_data

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

EXACT = Arith(True)
FLOAT = Arith(False)

GRAPHS = {
    "cube": lambda: graphs.hypercube(3),
    "hamming42": lambda: graphs.hamming(4, 2),
    "johnson63": lambda: graphs.johnson(6, 3),
}


@dataclass
class Setup:
    graph: object
    dd: object
    inn: object
    sd: object
    kd: object
    dual: object
    dec: object


@functools.lru_cache(maxsize=None)
def setup(name: str, exact: bool) -> Setup:
    """Q-polynomial ordering, dual data at vertex 0, and the decomposition."""
    arith = EXACT if exact else FLOAT
    g = GRAPHS[name]()
    dd = graphs.distance_data(g)
    inn = graphs.verify_distance_regular(dd)
    sd = primitive_idempotents(dd, inn, arith)
    kd = krein_parameters(sd)
    order = q_polynomial_orderings(kd, arith, sd.n)[0]
    sd, kd = sd.reordered(order), kd.reordered(order)
    dual = dual_data(sd, dd, 0)
    dec = decompose_standard_module(dual, sd, seed=0)
    return Setup(g, dd, inn, sd, kd, dual, dec)


@pytest.fixture(params=["exact", "float"])
def arith(request):
    return EXACT if request.param == "exact" else FLOAT


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, verdict = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {verdict}  {title}")
