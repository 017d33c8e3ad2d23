import random
from fractions import Fraction

import pytest

from ybsearch.algebra import atoms
from ybsearch.algebra.poly import Poly
from ybsearch.algebra.ratfunc import RatFunc
from ybsearch.relations import (
    RMatrixSymbolic,
    clean_relations,
    contraction_residual,
    contraction_to_flat,
    flat_to_hietarinta,
    generate_initial_relations,
    generate_relations,
    get_seed,
    hietarinta_to_flat,
    init_deriv_matrix,
    relation_matrices,
    seed_catalog,
    unknown_deriv_matrix,
    unknown_matrix,
    ybe_residual,
)


@pytest.mark.parametrize("n", [2, 3])
def test_index_round_trip(n):
    d = n * n
    seen = set()
    for r in range(d):
        for c in range(d):
            idx = flat_to_hietarinta(r, c, n)
            assert hietarinta_to_flat(*idx, n) == (r, c)
            seen.add(idx)
    assert len(seen) == d * d


def test_index_convention():
    # R_ij^kl sits at row (j-1)N + (i-1), column (l-1)N + (k-1)
    assert hietarinta_to_flat(1, 2, 1, 1) == (2, 0)
    assert hietarinta_to_flat(2, 1, 1, 2) == (1, 2)
    with pytest.raises(ValueError):
        hietarinta_to_flat(0, 1, 1, 1)


def _rand_matrix(rng):
    return RMatrixSymbolic.from_rows(
        [[Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(4)] for _ in range(4)])


@pytest.mark.parametrize("seed", range(5))
def test_embedding_matches_index_contraction(seed):
    rng = random.Random(seed)
    A, B, C = (_rand_matrix(rng) for _ in range(3))
    # reversed tensor factors swap the outer slots
    res = ybe_residual(C, B, A)
    idx = contraction_residual(A, B, C)
    for key, val in idx.items():
        r, c = contraction_to_flat(key)
        got = res.entries.get((r, c), RatFunc.of(0))
        assert RatFunc.of(val) == -got


def test_catalog_templates_satisfy_constant_ybe():
    seeds = seed_catalog()
    assert len(seeds) == 13
    assert sum(s.full_rank for s in seeds) == 9
    for s in seeds:
        res = ybe_residual(s.template, s.template, s.template)
        if not s.relations:
            assert all(v.is_zero() for v in res.entries.values()), s.id


def test_seed_aliases():
    assert get_seed("H01").id == "H01"
    with pytest.raises(KeyError):
        get_seed("H99")


@pytest.mark.parametrize("seed_id", [s.id for s in seed_catalog()])
def test_limit_property(seed_id):
    """The u -> 0 limit of the d/du relations reproduces the initial ones."""
    seed = get_seed(seed_id)
    tpl = seed.template
    R0 = tpl.mat.map(lambda e: e.num / e.den.constant_value())
    X, dX, dX0 = unknown_matrix(), unknown_deriv_matrix(), init_deriv_matrix()
    mats = relation_matrices(R0, X, dX, dX0)
    to_zero = {}
    for r in range(4):
        for c in range(4):
            to_zero[atoms.entry(r + 1, c + 1)] = R0.entries.get((r, c), Poly())
            to_zero[atoms.deriv_of(atoms.entry(r + 1, c + 1))] = Poly.var(atoms.init_deriv(r + 1, c + 1))
    limit = clean_relations(p.subs(to_zero) for k in ("d3", "d4") for p in mats[k].entries.values())
    assert set(limit) == set(generate_initial_relations(seed))


def test_relations_are_normalized():
    rels = generate_relations(get_seed("H01"))
    for p in rels.all():
        assert p.leading_coeff() > 0
        assert p.content() == 1


def test_relation_families_nonempty():
    rels = generate_relations(get_seed("H05"))
    a, d, i = rels.counts()
    assert a > 0 and d > 0 and i > 0
