import dataclasses
from fractions import Fraction

import numpy as np
import pytest

from conftest import EXACT, FLOAT, setup
from thinmod.invariants import SCALAR_FIELDS, ModuleError, NotThinError, analyze_module
from thinmod.kernel import dot, rank
from thinmod.params import cube_trivial_array, derived_scalars, isomorphism_test

NAMES = ["cube", "hamming42", "johnson63"]


def analyses(name, exact):
    s = setup(name, exact)
    return s, [(W, analyze_module(W, s.dual, s.sd)) for W in s.dec.modules if W.thin and W.d >= 1]


def test_cube_trivial_module():
    s, out = analyses("cube", True)
    (W, an), = [(W, an) for W, an in out if W.is_trivial]
    assert an.passed, an.audit.failures()
    assert an.parameter_array == cube_trivial_array(EXACT)
    sc = an.scalars
    assert sc.b == (3, 2, 1, 0) and sc.c == (0, 1, 2, 3) and sc.a == (0, 0, 0, 0)
    assert sc.k == (1, 3, 3, 1) and sc.nu == 8
    assert sc.m == (Fraction(1, 8), Fraction(3, 8), Fraction(3, 8), Fraction(1, 8))


def test_cube_small_modules():
    s, out = analyses("cube", True)
    small = [an for W, an in out if not W.is_trivial]
    assert len(small) == 2
    for an in small:
        assert an.passed
        pa = an.parameter_array
        assert (pa.r, pa.t, pa.d) == (1, 1, 1)
        assert pa.theta == (1, -1) and pa.theta_star == (1, -1)
    assert isomorphism_test(small[0].parameter_array, small[1].parameter_array, EXACT)


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("exact", [True, False])
def test_matrix_and_formula_scalars_agree(name, exact):
    arith = EXACT if exact else FLOAT
    _, out = analyses(name, exact)
    assert out
    for W, an in out:
        assert an.passed, (W.r, W.t, W.d, an.audit.failures())
        ds = derived_scalars(an.parameter_array, arith)
        for f in SCALAR_FIELDS:
            mine, theirs = getattr(an.scalars, f), getattr(ds, f)
            assert all(arith.same(p, q, 10) for p, q in zip(mine, theirs)), f
        assert arith.same(an.scalars.nu, ds.nu, 10)


def test_bases_are_bases():
    _, out = analyses("johnson63", True)
    for W, an in out:
        assert an.bases.u.shape == an.bases.v.shape == (W.basis.shape[0],)
        for field in dataclasses.fields(an.bases)[2:]:
            M = getattr(an.bases, field.name)
            assert M.shape == (W.basis.shape[0], W.d + 1)
            assert rank(M, EXACT) == W.d + 1, field.name


def test_rescaling_the_module_basis_changes_nothing():
    s = setup("hamming42", True)
    W = next(W for W in s.dec.modules if W.d == 2 and not W.is_trivial)
    factors = [Fraction(k + 2, 3) for k in range(W.dim)]
    scaled = dataclasses.replace(W, basis=W.basis * np.array(factors, dtype=object))
    assert dot(scaled.basis[:, 0], scaled.basis[:, 1]) == 0
    one, two = analyze_module(W, s.dual, s.sd), analyze_module(scaled, s.dual, s.sd)
    assert one.scalars == two.scalars
    assert one.parameter_array == two.parameter_array


def test_non_thin_module_is_rejected():
    s = setup("cube", True)
    W = next(W for W in s.dec.modules if not W.is_trivial)
    with pytest.raises(NotThinError):
        analyze_module(dataclasses.replace(W, thin=False), s.dual, s.sd)


def test_zero_diameter_module_is_rejected():
    s = setup("hamming42", True)
    flat = [W for W in s.dec.modules if W.d == 0]
    assert flat
    with pytest.raises(ModuleError):
        analyze_module(flat[0], s.dual, s.sd)
