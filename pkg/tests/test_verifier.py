import json
import zlib
from importlib import resources

import pytest

from ybsearch import closedform as cf
from ybsearch import verifier as V
from ybsearch.algebra.atoms import Arg
from ybsearch.relations import RMatrixSymbolic, seed_catalog, ybe_residual

import oracle

CORPUS = V.load_corpus()
RAW = {s["id"]: s for s in json.loads(resources.files("ybsearch").joinpath("data/corpus.json").read_text())["solutions"]}


def test_corpus_shape():
    groups = {}
    for e in CORPUS:
        groups.setdefault(e.group, []).append(e)
    assert len(groups["fullrank"]) == 10
    assert len(groups["rank3"]) == 3
    assert all(e.kind == "constant" for e in groups["extra_const"])


def test_corpus_passes():
    rep = V.corpus_check()
    assert rep.passed, rep.failures()
    assert len(rep.lines()) == len(CORPUS)


@pytest.mark.parametrize("entry", CORPUS, ids=lambda e: e.id)
def test_numeric_cross_check(entry):
    raw = RAW[entry.id]
    assert oracle.numeric_ybe_holds(raw["rows"], trials=50, seed=zlib.crc32(entry.id.encode()),
                                    spectral=entry.kind != "constant")


@pytest.mark.parametrize("entry", [e for e in CORPUS if e.kind == "spectral"], ids=lambda e: e.id)
def test_v_zero_specialization(entry):
    # R(u) R(u) R(0) and R(0) R(u) R(u) relations of the seed R(0)
    Ru = entry.matrix.map(cf.normalize)
    R0 = entry.matrix.at(Arg.ZERO)
    for res in (ybe_residual(Ru, Ru, R0), ybe_residual(R0, Ru, Ru)):
        assert all(cf.normalize(x).is_zero() for x in res.entries.values())


def test_constant_and_spectral_agree():
    for s in seed_catalog():
        if s.relations:
            continue
        assert V.verify_constant(s.template).passed == V.verify_spectral(s.template).passed
    bad = RMatrixSymbolic.from_rows([["1", "2", "0", "0"], ["0", "1", "0", "0"], ["0", "0", "1", "0"], ["3", "0", "0", "1"]])
    assert not V.verify_constant(bad).passed
    assert not V.verify_spectral(bad).passed


def test_mutated_entry_fails_with_location():
    good = RAW["fullrank-3"]["rows"]
    rows = [list(r) for r in good]
    rows[1][1] = "2*" + rows[1][1] if rows[1][1] not in ("0",) else "1"
    res = V.verify_spectral(RMatrixSymbolic.from_rows(rows))
    assert not res.passed
    r, c, text = res.failing_entry
    assert 0 <= r < 8 and 0 <= c < 8 and text
    assert not oracle.numeric_ybe_holds(rows, trials=3)


def test_out_of_fragment_rejected():
    R = RMatrixSymbolic.from_rows([["1", "0", "0", "0"], ["0", "v", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]])
    with pytest.raises(V.UnsupportedEntry):
        V.verify_spectral(R)


def test_rank():
    assert V.symbolic_rank(RMatrixSymbolic.identity()) == 4
    for e in CORPUS:
        if e.rank is not None:
            assert V.symbolic_rank(e.matrix) == e.rank, e.id


def test_parse_solutions_errors():
    with pytest.raises(V.CorpusError):
        V.parse_solutions({"schema": "other"})
    with pytest.raises(V.CorpusError):
        V.parse_solutions({"schema": V.CORPUS_SCHEMA, "solutions": [{"id": "x"}]})
