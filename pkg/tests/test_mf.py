import numpy as np
import pytest

from conftest import equation
from mflab.mf import (
    CocycleError,
    InsufficientPoints,
    InvalidFactorization,
    MatrixFactorization,
    SubsetModuleSpec,
    all_subsets,
    blocks,
    coboundary,
    direct_sum,
    is_free_block,
    dual,
    extension_from_cocycle,
    knoerrer,
    minimalize,
    random_mf,
    rank_vector,
    s_ideal,
    split_blocks,
    subset_label,
    syzygy,
    trivial,
    validate_mf,
)
from mflab.modules import iso_test
from mflab.poly import PolyMatrix, RingCtx


def mf(ctx, f, phi, psi):
    return MatrixFactorization.from_text(ctx, f, phi, psi)


def test_validate_simple(xy):
    assert validate_mf(mf(xy, "x*y", [["x"]], [["y"]]))


def test_validate_reports_entry(xy):
    v = validate_mf(mf(xy, "x*y", [["x"]], [["x"]]))
    assert not v
    assert v.entry == (0, 0)
    assert v.found == "x^2"


def test_knoerrer_matrices(xy):
    k = knoerrer(mf(xy, "x*y", [["x"]], [["y"]]))
    ctx = k.ctx
    assert ctx.vars == ("x", "y", "u", "v")
    assert k.f == ctx.parse("x*y + u*v")
    assert k.phi == PolyMatrix.from_text(ctx, [["u", "y"], ["x", "-v"]])
    assert k.psi == PolyMatrix.from_text(ctx, [["v", "y"], ["x", "-u"]])
    assert validate_mf(k)


def test_knoerrer_collision(xy):
    with pytest.raises(ValueError):
        knoerrer(mf(xy, "x*y", [["x"]], [["y"]]), "x", "v")


@pytest.mark.parametrize("seed", range(24))
def test_knoerrer_valid_on_random(seed, three_lines):
    rng = np.random.default_rng(seed)
    m = random_mf(three_lines, int(rng.integers(1, 4)), rng)
    assert validate_mf(m)
    assert validate_mf(knoerrer(m))


def test_syzygy_of_subset(three_lines):
    S1 = s_ideal(three_lines, {1})
    assert syzygy(S1) == s_ideal(three_lines, {2, 3})
    for I in all_subsets(3)[:-1]:
        comp = frozenset({1, 2, 3}) - I
        assert syzygy(s_ideal(three_lines, I)) == s_ideal(three_lines, comp)


def test_syzygy_and_dual_involutions(cusp_line):
    rng = np.random.default_rng(3)
    for _ in range(5):
        m = random_mf(cusp_line, 3, rng)
        assert syzygy(syzygy(m)) == m
        assert dual(dual(m)) == m
        assert validate_mf(dual(m))


def test_syzygy_swaps(xy):
    m = mf(xy, "x*y", [["x"]], [["y"]])
    assert syzygy(m) == mf(xy, "x*y", [["y"]], [["x"]])


def test_invalid_input_rejected(xy):
    bad = mf(xy, "x*y", [["x"]], [["x"]])
    with pytest.raises(InvalidFactorization):
        syzygy(bad)
    with pytest.raises(InvalidFactorization):
        dual(bad)


def test_dual_one_by_one_fixed(three_lines):
    for I in all_subsets(3):
        S = s_ideal(three_lines, I)
        assert dual(S) == S


def test_dual_of_knoerrer(xy):
    k = knoerrer(mf(xy, "x*y", [["x"]], [["y"]]))
    d = dual(k)
    assert d.phi == k.phi.T
    assert validate_mf(d)


def test_direct_sum(three_lines):
    S1 = s_ideal(three_lines, {1})
    S12 = s_ideal(three_lines, {1, 2})
    s = direct_sum(S1, S12)
    assert s.size == 2
    assert validate_mf(s)
    assert s.phi[0, 1].is_zero() and s.phi[1, 0].is_zero()
    assert direct_sum(S1, trivial(three_lines.f)).size == 2


def test_direct_sum_mismatch(three_lines, node):
    with pytest.raises(InvalidFactorization):
        direct_sum(s_ideal(three_lines, {1}), s_ideal(node, {1}))


def test_s_ideal_examples(three_lines, xy):
    S1 = s_ideal(three_lines, {1})
    assert S1.phi[0, 0] == xy.parse("x")
    assert S1.psi[0, 0] == xy.parse("y*(x+y)")
    full = s_ideal(three_lines, {1, 2, 3})
    assert full.phi[0, 0] == three_lines.f
    assert full.psi[0, 0] == xy.one()


def test_s_ideal_empty(three_lines):
    with pytest.raises(ValueError):
        SubsetModuleSpec(three_lines, frozenset())
    with pytest.raises(ValueError):
        SubsetModuleSpec(three_lines, frozenset({4}))


def test_all_subsets_order():
    subs = all_subsets(3)
    assert len(subs) == 7
    assert subs[0] == frozenset({1}) and subs[-1] == frozenset({1, 2, 3})
    assert subset_label({2, 1}) == "S{1,2}"


def test_equation_rejects_proportional(xy):
    with pytest.raises(ValueError):
        equation("x*(2*x)")
    with pytest.raises(ValueError):
        equation("(x+1)*y")


def test_extension_zero_is_sum(node, xy):
    n, m = s_ideal(node, {2}), s_ideal(node, {1})
    z = PolyMatrix.zeros(xy, 1, 1)
    E = extension_from_cocycle(n, m, z, z)
    assert E == direct_sum(n, m)
    assert iso_test(E, direct_sum(n, m)).verdict == "isomorphic"


def test_extension_nonsplit(node, xy):
    n, m = s_ideal(node, {2}), s_ideal(node, {1})
    one = PolyMatrix.from_text(xy, [["1"]])
    E = extension_from_cocycle(n, m, one, one.scale(-1))
    assert validate_mf(E)
    assert is_free_block(minimalize(E))
    assert iso_test(E, direct_sum(n, m)).verdict == "not-isomorphic"


def test_extension_bad_cocycle(node, xy):
    n, m = s_ideal(node, {2}), s_ideal(node, {1})
    one = PolyMatrix.from_text(xy, [["1"]])
    with pytest.raises(CocycleError):
        extension_from_cocycle(n, m, one, one)


def test_coboundary_is_split(three_lines, xy):
    n, m = s_ideal(three_lines, {2}), s_ideal(three_lines, {1})
    h = PolyMatrix.from_text(xy, [["x+2*y"]])
    k = PolyMatrix.from_text(xy, [["y^2-3"]])
    a, b = coboundary(n, m, h, k)
    E = extension_from_cocycle(n, m, a, b)
    assert validate_mf(E)
    assert iso_test(E, direct_sum(n, m)).verdict == "isomorphic"


def test_minimalize_drops_units(xy, node):
    m = direct_sum(s_ideal(node, {1}), MatrixFactorization(node.f, PolyMatrix.from_text(xy, [["1"]]),
                                                           PolyMatrix.from_text(xy, [["x*y"]])))
    assert minimalize(m) == s_ideal(node, {1})
    assert minimalize(trivial(node.f), strip_free=True) is None
    assert minimalize(trivial(node.f)) == trivial(node.f)


def test_blocks(three_lines):
    m = direct_sum(s_ideal(three_lines, {1}), s_ideal(three_lines, {2}))
    assert len(blocks(m)) == 2
    assert split_blocks(m) == [s_ideal(three_lines, {1}), s_ideal(three_lines, {2})]


def test_rank_vector(three_lines):
    assert rank_vector(s_ideal(three_lines, {1}), three_lines) == [1, 0, 0]
    assert rank_vector(trivial(three_lines.f), three_lines) == [1, 1, 1]
    s = direct_sum(s_ideal(three_lines, {1, 3}), s_ideal(three_lines, {1, 3}))
    assert rank_vector(s, three_lines) == [2, 0, 2]


def test_rank_vector_no_points():
    ctx = RingCtx(("x", "y"), p=3)
    eq = equation_in(ctx, "x*(x^2+y^2)")
    with pytest.raises(InsufficientPoints):
        rank_vector(s_ideal(eq, {1}), eq, samples=50)


def equation_in(ctx, text):
    from mflab.mf import FactoredEquation
    return FactoredEquation.from_text(text, ctx)


def test_json_roundtrip(cusp_line):
    rng = np.random.default_rng(7)
    m = random_mf(cusp_line, 3, rng)
    assert MatrixFactorization.from_json(m.to_json()) == m
    k = knoerrer(m)
    assert MatrixFactorization.from_json(k.to_json()) == k


def test_json_size_mismatch(node):
    doc = s_ideal(node, {1}).to_json()
    doc["size"] = 2
    with pytest.raises(InvalidFactorization):
        MatrixFactorization.from_json(doc)
