import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ybsearch import closedform as cf
from ybsearch import symmetry as Y
from ybsearch import verifier as V
from ybsearch.algebra.ratfunc import RatFunc
from ybsearch.relations import RMatrixSymbolic

CORPUS = {e.id: e for e in V.load_corpus()}
H01_CASE1 = [["1", "0", "0", "r1(u)"], ["0", "-1", "0", "0"], ["0", "0", "-1", "0"], ["0", "0", "0", "1"]]


@pytest.mark.parametrize("n", [2, 3])
def test_group_laws(n):
    R = RMatrixSymbolic.unknown(n)
    P = lambda M: Y.apply_pct(M, "P")
    T = lambda M: Y.apply_pct(M, "T")
    C = lambda M: Y.apply_pct(M, "C")
    assert P(P(R)) == R
    assert T(T(R)) == R
    assert P(T(P(T(R)))) == R
    M = R
    for _ in range(n):
        M = C(M)
    assert M == R
    if n > 1:
        assert C(R) != R


def test_orbit_words():
    words = Y._orbit_words(2)
    assert len(words) == 8
    assert words[0] == ()


def test_k_matrix_unimodular():
    K = Y.k_matrix(2, 3, 5)
    det = cf.normalize(K[0][0] * K[1][1] - K[0][1] * K[1][0])
    assert det == RatFunc.of(1)
    with pytest.raises(Y.SingularK):
        Y.k_matrix(0, 1, 1)


@pytest.mark.parametrize("eid", ["fullrank-1", "fullrank-3", "rank3-1", "extra_baxterized-5"])
def test_canonicalize_idempotent_and_orbit_constant(eid):
    R = CORPUS[eid].matrix
    can = Y.canonicalize(R)
    assert Y.canonicalize(can.matrix).text == can.text
    for word in Y._orbit_words(2):
        assert Y.canonicalize(Y.apply_word(R, word)).text == can.text


@pytest.mark.parametrize("eid", ["fullrank-1", "fullrank-2", "fullrank-5", "extra_baxterized-3"])
def test_inverse(eid):
    R = CORPUS[eid].matrix
    Ri = Y.invert_r(R)
    prod = R.mat @ Ri.mat
    for r in range(4):
        for c in range(4):
            x = cf.normalize(prod.entries.get((r, c), RatFunc.of(0)))
            assert x == RatFunc.of(int(r == c))


def test_singular_inverse_raises():
    with pytest.raises(Y.SingularMatrix):
        Y.invert_r(CORPUS["rank3-1"].matrix)


points = st.tuples(
    st.fractions(min_value=-4, max_value=4, max_denominator=3).filter(lambda x: x != 0),
    st.fractions(min_value=-3, max_value=3, max_denominator=3),
    st.fractions(min_value=-3, max_value=3, max_denominator=3),
    st.fractions(min_value=-4, max_value=4, max_denominator=3).filter(lambda x: x != 0),
)


@settings(max_examples=15, deadline=None)
@given(points, st.sampled_from(["fullrank-1", "fullrank-4", "rank3-2", "extra_rank3-1"]))
def test_similarity_preserves_ybe(pt, eid):
    e = CORPUS[eid]
    S = Y.apply_similarity(e.matrix, *pt)
    assert V.verify_spectral(S, e.relations).passed
    assert Y.ybe_preserved_under(e.matrix, Y.Transform(Y.TKind.SIMILARITY, a=pt[0], b=pt[1], c=pt[2], g=pt[3]))


def test_similarity_inverse_is_identity():
    R = CORPUS["fullrank-2"].matrix
    S = Y.apply_similarity(R, 2, 1, 3, 5)
    rep = Y.equivalent_mod_similarity(R, S)
    assert rep.verdict == Y.Verdict.EQUIVALENT
    assert Y.replay(S, rep.forward).map(cf.normalize) == R.map(cf.normalize)
    assert Y.replay(R, rep.backward).map(cf.normalize) == S.map(cf.normalize)


@pytest.mark.parametrize("word", ["P", "C", "T", "PC", "PCT"])
def test_word_images_match(word):
    R = RMatrixSymbolic.from_rows(H01_CASE1)
    img = Y.apply_word(R, tuple(word))
    w = Y.match_into(img, R)
    assert w is not None
    assert Y._same(Y.replay(R, w), img, ())


def test_rank_certificate():
    rep = Y.equivalent_mod_similarity(CORPUS["fullrank-1"].matrix, CORPUS["rank3-1"].matrix)
    assert rep.verdict == Y.Verdict.DISTINCT
    assert rep.certificate[0] == "rank" and rep.certificate[1] != rep.certificate[2]


def test_characteristic_polynomial_certificate():
    I = RMatrixSymbolic.identity()
    D = RMatrixSymbolic.from_rows([["1", "0", "0", "0"], ["0", "-1", "0", "0"], ["0", "0", "-1", "0"], ["0", "0", "0", "1"]])
    rep = Y.equivalent_mod_similarity(I, D)
    assert rep.verdict == Y.Verdict.DISTINCT
    assert rep.certificate[0] == "charpoly_zeros"
    # scaled: same class
    assert Y.equivalent_mod_similarity(D, D.map(lambda x: x * 3)).verdict == Y.Verdict.EQUIVALENT


def test_charpoly_against_determinant():
    rng = random.Random(3)
    rows = [[Fraction(rng.randint(-3, 3)) for _ in range(4)] for _ in range(4)]
    cp = Y._charpoly(rows)
    det = V.determinant(RMatrixSymbolic.from_rows(rows))
    assert cp[-1] == det.num.constant_value() / det.den.constant_value()
    assert cp[0] == -sum(rows[i][i] for i in range(4))


@pytest.mark.parametrize("word", ["", "P", "C", "CT", "PCT"])
def test_invert_witness(word):
    R = CORPUS["fullrank-5"].matrix
    S = Y.apply_word(Y.apply_similarity(R, 2, 1, 3, 5), tuple(word))
    fwd = Y.match_into(S, R)
    assert fwd is not None
    back = Y.invert_witness(fwd, S, R)
    assert back is not None
    assert Y._same(Y.replay(S, back), R, ())


def test_witness_document():
    w = Y.Witness(("P", "C"), RatFunc.of(2), RatFunc.of(1), RatFunc.of(0), RatFunc.of(5))
    doc = w.to_doc()
    assert doc["word"] == "PC" and doc["a"] == "2" and doc["g"] == "5"


def test_dedup_merges_orbit():
    R = RMatrixSymbolic.from_rows(H01_CASE1)
    classes = Y.dedup([R, Y.apply_pct(R, "T"), Y.apply_word(R, ("P", "C"))])
    assert len(classes) == 1
    assert len(classes[0].members) == 3
