import json
import subprocess
import sys

import pytest

from ybsearch import cli
from ybsearch import verifier as V

import oracle


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def h05_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("h05")
    assert cli.main(["solve", "--seed", "H05", "--mode", "rank3", "--out", str(out)]) == 0
    return out


def test_solve_writes_schema_documents(h05_dir):
    report = json.loads((h05_dir / "report.json").read_text())
    graph = json.loads((h05_dir / "graph.json").read_text())
    assert report["schema"] == V.CORPUS_SCHEMA
    assert graph["schema"].startswith("ybsearch-graph/")
    assert report["tuning"]["n_term"] == 4
    assert report["solutions"] and report["classes"]
    assert any("e^{" in line for line in report["human"])
    assert (h05_dir / "summary.txt").read_text().strip()


def test_verify_report(h05_dir, capsys):
    code, out, _ = run(["verify", str(h05_dir / "report.json")], capsys)
    assert code == 0
    assert out.strip().endswith("passed")


def test_verify_detects_sign_flip(h05_dir, tmp_path, capsys):
    doc = json.loads((h05_dir / "report.json").read_text())
    rows = doc["solutions"][0]["rows"]
    for r in range(4):
        for c in range(4):
            if rows[r][c] != "0":
                rows[r][c] = f"-({rows[r][c]})"
                break
        else:
            continue
        break
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert not oracle.numeric_ybe_holds(rows, trials=3)
    code, out, _ = run(["verify", str(bad)], capsys)
    assert code == 1
    assert "FAIL" in out


def test_verify_corpus_file(tmp_path, capsys):
    from importlib import resources

    src = resources.files("ybsearch").joinpath("data/corpus.json").read_text()
    p = tmp_path / "corpus.json"
    p.write_text(src)
    code, out, _ = run(["verify", str(p)], capsys)
    assert code == 0
    n = len(V.load_corpus())
    assert f"{n}/{n} passed" in out


def test_verify_empty_file_warns(tmp_path, capsys):
    p = tmp_path / "empty.json"
    p.write_text("")
    code, _, err = run(["verify", str(p)], capsys)
    assert code == 0 and "warning" in err


def test_verify_missing_file(tmp_path, capsys):
    code, _, err = run(["verify", str(tmp_path / "nope.json")], capsys)
    assert code == 1 and "not found" in err


def test_unknown_seed(tmp_path, capsys):
    code, _, err = run(["solve", "--seed", "H99", "--out", str(tmp_path)], capsys)
    assert code == 2 and "unknown seed" in err


def test_invalid_tuning(tmp_path, capsys):
    code, _, _ = run(["solve", "--seed", "H05", "--n-term", "0", "--out", str(tmp_path)], capsys)
    assert code == 2


def test_resume_missing_graph(tmp_path, capsys):
    code, _, _ = run(["resume", str(tmp_path / "graph.json")], capsys)
    assert code != 0


def test_resume_in_place(h05_dir, tmp_path, capsys):
    out = tmp_path / "again"
    code, _, _ = run(["resume", str(h05_dir / "graph.json"), "--n-lim", "30", "--out", str(out)], capsys)
    assert code == 0
    g = json.loads((out / "graph.json").read_text())
    assert g["runs"][-1]["tuning"]["n_lim"] == 30


def test_export_graph_round_trip(h05_dir, tmp_path, capsys):
    out = tmp_path / "g.json"
    assert cli.main(["export-graph", str(h05_dir / "graph.json"), "--out", str(out)]) == 0
    assert out.read_text() == (h05_dir / "graph.json").read_text()
    code, dot, _ = run(["export-graph", str(h05_dir / "graph.json"), "--format", "dot"], capsys)
    assert code == 0
    assert "v0 [fillcolor=green" in dot
    assert "fillcolor=red" in dot


def test_canon_groups(h05_dir, tmp_path, capsys):
    out = tmp_path / "classes.json"
    assert cli.main(["canon", str(h05_dir / "report.json"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == cli.CLASSES_SCHEMA
    assert doc["classes"]
    for cls in doc["classes"]:
        assert cls["members"]


def test_config_file_and_env(tmp_path, monkeypatch, capsys):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("seed = H05\nmode = rank3\nn_term = 5\n")
    monkeypatch.setenv(cli.CONFIG_ENV, str(cfgfile))
    out = tmp_path / "o"
    code, _, _ = run(["solve", "--n-term", "6", "--out", str(out)], capsys)
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    # flag beats file, file beats default
    assert rep["tuning"]["n_term"] == 6
    assert rep["seed"] == "H05"


def test_catalog_lists_seeds(capsys):
    code, out, _ = run(["catalog"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) == 13


def test_render_entry():
    assert cli.render_entry("exp(c1*u)") == "e^{c_1 u}"
    assert "r_1(u)" in cli.render_entry("r1(u) + 1")


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "ybsearch.cli", "catalog"], capture_output=True, text=True)
    assert res.returncode == 0 and "H01" in res.stdout
