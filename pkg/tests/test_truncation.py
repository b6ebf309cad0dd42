import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mflab.poly import PolyMatrix, RingCtx
from mflab.truncation import (
    Presentation,
    TruncationTooLarge,
    kernel_gap,
    model,
    monomials,
    truncation_basis,
)


def test_basis_node(xy):
    b = truncation_basis(xy, xy.parse("x*y"), 4)
    assert b.dim == 7
    assert sorted(b.labels()) == sorted(["1", "x", "y", "x^2", "y^2", "x^3", "y^3"])


def test_basis_line(xy):
    b = truncation_basis(xy, xy.parse("x"), 3)
    assert b.labels() == ["1", "y", "y^2"]


def test_basis_degrees_below_D(xy):
    b = truncation_basis(xy, xy.parse("x^2 + y^3"), 6)
    assert all(sum(e) < 6 for e in b.monomials)


@pytest.mark.parametrize("f, branches", [("x*y", 2), ("x*y*(x+y)", 3), ("x*y*(x+y)*(x-y)", 4)])
def test_growth_by_branches(xy, f, branches):
    dims = [truncation_basis(xy, xy.parse(f), D).dim for D in range(6, 11)]
    assert all(b - a == branches for a, b in zip(dims, dims[1:]))


def test_basis_errors(xy):
    with pytest.raises(ValueError):
        truncation_basis(xy, xy.parse("x+1"), 4)
    with pytest.raises(ValueError):
        truncation_basis(xy, xy.parse("x*y"), 1)


def test_memory_cap(monkeypatch, xy):
    monkeypatch.setenv("MFLAB_MEMORY_CAP_MB", "0")
    f = xy.parse("x*y*(x+y)")
    pres = Presentation(xy, f, 1, ((f,),))
    from mflab.truncation import TruncatedModel
    with pytest.raises(TruncationTooLarge):
        TruncatedModel(pres, 30)


def test_monomial_order():
    mons = monomials(2, 3)
    assert [sum(e) for e in mons] == [0, 1, 1, 2, 2, 2]


def test_kernel_gap():
    assert kernel_gap(8) == 6
    assert kernel_gap(3) == 3


def test_projection_commutes_with_action(xy):
    f = xy.parse("x*y*(x+y)")
    pres = Presentation.of_matrix(f, PolyMatrix.from_text(xy, [["x", "y"], ["0", "y*(x+y)"]]), add_f=True)
    hi, lo = model(pres, 8), model(pres, 6)
    P = hi.projection_to(lo)
    for g in ("x", "y", "x+3*y^2"):
        a = (P @ hi.act(xy.parse(g))) % xy.p
        b = (lo.act(xy.parse(g)) @ P) % xy.p
        assert np.array_equal(a, b)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=3), st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_action_is_multiplicative(ca, cb):
    ctx = RingCtx(("x", "y"))
    f = ctx.parse("x*y*(x+y)")
    mdl = model(Presentation(ctx, f, 1, ((f,),)), 7)
    g = ctx.parse(f"{ca[0]}*x + {ca[1]}*y + {ca[2]}*x*y")
    h = ctx.parse(f"{cb[0]}*x^2 + {cb[1]}*y + {cb[2]}")
    lhs = mdl.act(g * h)
    rhs = (mdl.act(g) @ mdl.act(h)) % ctx.p
    assert np.array_equal(lhs, rhs)
