import numpy as np
import pytest

from mflab.mf import (
    MatrixFactorization,
    all_subsets,
    direct_sum,
    dual,
    extension_from_cocycle,
    knoerrer,
    random_mf,
    s_ideal,
    syzygy,
    trivial,
)
from mflab.modules import (
    PushforwardError,
    add_membership,
    depth_probe,
    fingerprint,
    indecomposable_probe,
    iso_test,
    min_generators,
    pushforward,
)
from mflab.poly import PolyMatrix


@pytest.fixture(scope="module")
def conifold_K(node):
    return knoerrer(s_ideal(node, {1}))


def test_min_generators(three_lines, conifold_K):
    for I in all_subsets(3)[:-1]:
        assert min_generators(s_ideal(three_lines, I)) == 1
    assert min_generators(direct_sum(s_ideal(three_lines, {1}), s_ideal(three_lines, {1, 2}))) == 2
    assert min_generators(conifold_K) == 2


def test_iso_reflexive(three_lines):
    rng = np.random.default_rng(1)
    for _ in range(3):
        m = random_mf(three_lines, 2, rng)
        w = iso_test(m, m)
        assert w.verdict == "isomorphic"
        assert w.forward is not None and w.backward is not None


def test_iso_separates_lines(node):
    w = iso_test(s_ideal(node, {1}), s_ideal(node, {2}), eq=node)
    assert w.verdict == "not-isomorphic"
    assert w.evidence


def test_iso_symmetric(three_lines):
    mods = [s_ideal(three_lines, I) for I in all_subsets(3)]
    for a in mods:
        for b in mods:
            assert iso_test(a, b).verdict == iso_test(b, a).verdict


def test_iso_under_conjugation(cusp_line, xy):
    rng = np.random.default_rng(11)
    P = PolyMatrix.from_text(xy, [["1", "x"], ["0", "1"]])
    Pi = PolyMatrix.from_text(xy, [["1", "-x"], ["0", "1"]])
    for _ in range(3):
        m = random_mf(cusp_line, 2, rng)
        moved = MatrixFactorization(m.f, P @ m.phi @ Pi, P @ m.psi @ Pi)
        assert moved != m
        assert iso_test(m, moved).verdict == "isomorphic"


def test_double_dual(three_lines):
    rng = np.random.default_rng(5)
    for _ in range(3):
        m = random_mf(three_lines, 2, rng)
        assert iso_test(m, dual(dual(m))).verdict == "isomorphic"


def test_knoerrer_commutes_with_syzygy(three_lines):
    for I in all_subsets(3)[:-1]:
        M = s_ideal(three_lines, I)
        assert iso_test(knoerrer(syzygy(M)), syzygy(knoerrer(M))).verdict == "isomorphic"


def test_fingerprint_keys(node):
    fp = fingerprint(s_ideal(node, {1}), D=6, eq=node)
    assert fp["mu"] == 1
    assert set(fp) >= {"mu", "rank", "end_dim"}


# -- decomposition ------------------------------------------------------------

def test_indecomposable_subsets(three_lines):
    for I in all_subsets(3)[:-1]:
        assert indecomposable_probe(s_ideal(three_lines, I)).verdict == "indecomposable-likely"


def test_sum_decomposes(node):
    S1, S2 = s_ideal(node, {1}), s_ideal(node, {2})
    d = indecomposable_probe(direct_sum(S1, S2))
    assert d.verdict == "decomposes"
    assert len(d.factors) == 2
    verdicts = sorted(iso_test(f, S).verdict for f in d.factors for S in (S1, S2))
    assert verdicts.count("isomorphic") == 2


def test_sum_decomposes_after_scrambling(three_lines, xy):
    S1, S23 = s_ideal(three_lines, {1}), s_ideal(three_lines, {2, 3})
    m = direct_sum(S1, S23)
    # conjugate by a constant invertible matrix
    P = PolyMatrix.from_text(xy, [["1", "2"], ["0", "1"]])
    Pi = PolyMatrix.from_text(xy, [["1", "-2"], ["0", "1"]])
    mixed = MatrixFactorization(m.f, P @ m.phi @ Pi, P @ m.psi @ Pi)
    assert indecomposable_probe(mixed).verdict == "decomposes"


def test_nonsplit_extension_indecomposable(cusp_line, xy):
    n, m = s_ideal(cusp_line, {2}), s_ideal(cusp_line, {1})
    one = PolyMatrix.from_text(xy, [["1"]])
    E = extension_from_cocycle(n, m, one, one.scale(-1))
    assert indecomposable_probe(E).verdict == "indecomposable-likely"


# -- add membership --------------------------------------------------------------

def test_add_membership(node):
    S1, S2, R = s_ideal(node, {1}), s_ideal(node, {2}), trivial(node.f)
    M = direct_sum(R, S1)
    assert add_membership(M, M).verdict == "member"
    assert add_membership(S2, M).verdict == "not-member"
    assert add_membership(direct_sum(S1, S1), M).verdict == "member"
    assert add_membership(R, M).verdict == "member"


def test_add_membership_monotone(three_lines):
    S = lambda *I: s_ideal(three_lines, set(I))
    M = direct_sum(S(1), S(1, 2))
    Y = S(3)
    for X in (S(1), S(1, 2), direct_sum(S(1), S(1))):
        assert add_membership(X, M).verdict == "member"
        assert add_membership(X, direct_sum(M, Y)).verdict == "member"
    assert add_membership(S(2), M).verdict == "not-member"


# -- pushforward -------------------------------------------------------------------

def test_pushforward_free(conifold_K):
    r = pushforward(trivial(conifold_K.f))
    assert r.lam == 1 and r.M1 is None and r.exact


def test_pushforward_conifold(conifold_K):
    r = pushforward(conifold_K)
    assert r.lam == 2
    assert r.exact
    assert r.rank_check["holds"]
    assert r.rank_check["rank_M1"] == [1]
    assert r.depth["holds"]
    doc = r.to_json()
    assert doc["lambda"] == 2


def test_pushforward_needs_three_variables(node):
    with pytest.raises(PushforwardError):
        pushforward(s_ideal(node, {1}))


def test_depth_probe_conifold(conifold_K):
    assert depth_probe(conifold_K, (3, 4, 5))["depth"] == 3
