"""Command line interface: solve, verify, canon, export-graph, resume, catalog.

Configuration comes from a flat ``key = value`` file (path in the
``YBSEARCH_CONFIG`` environment variable or ``--config``); command line
flags override it.  Every file written is JSON with a ``schema`` field and
is produced deterministically.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ybsearch import search as S
from ybsearch import symmetry as Y
from ybsearch import verifier as V
from ybsearch.algebra import atoms
from ybsearch.algebra.atoms import Kind
from ybsearch.algebra.poly import Poly
from ybsearch.algebra.ratfunc import RatFunc
from ybsearch import closedform as cf
from ybsearch.relations import RMatrixSymbolic, get_seed, seed_catalog

CONFIG_ENV = "YBSEARCH_CONFIG"
CLASSES_SCHEMA = "ybsearch-classes/1"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed_id: str = ""
    mode: str | None = None
    tuning: S.Tuning = field(default_factory=S.Tuning)
    out: str = "."
    jobs: int = 1

    def validate(self) -> None:
        try:
            seed = get_seed(self.seed_id)
        except KeyError:
            raise ConfigError(f"unknown seed {self.seed_id!r}") from None
        if self.mode is not None:
            try:
                m = S.Mode(self.mode)
            except ValueError:
                raise ConfigError(f"unknown mode {self.mode!r}") from None
            if m == S.Mode.INVERTIBLE and not seed.full_rank:
                raise ConfigError(f"seed {seed.id} has rank {seed.rank}; use --mode rank3")
            if m == S.Mode.RANK3 and seed.full_rank:
                raise ConfigError(f"seed {seed.id} is invertible; rank3 mode needs a rank-3 seed")
        if self.jobs < 1:
            raise ConfigError("--jobs must be at least 1")


_TUNING_KEYS = {f.name for f in fields(S.Tuning) if f.name != "gauge"}


def read_config_file(path: str | os.PathLike) -> dict:
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    text = Path(path).read_text()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return {k.replace("-", "_"): v.strip() for k, v in cp["run"].items()}


def _int(key, value) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def build_config(args, base: dict | None = None) -> RunConfig:
    """Merge config file values with explicit command line flags."""
    vals = dict(base or {})
    for key in ("seed", "mode", "out", "jobs") + tuple(sorted(_TUNING_KEYS)):
        v = getattr(args, key, None)
        if v is not None:
            vals[key] = v
    unknown = set(vals) - {"seed", "mode", "out", "jobs"} - _TUNING_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    tune = {k: _int(k, vals[k]) for k in _TUNING_KEYS if k in vals}
    try:
        tuning = S.Tuning(**tune)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig(str(vals.get("seed", "")), vals.get("mode"), tuning,
                    str(vals.get("out", ".")), _int("jobs", vals.get("jobs", 1)))
    return cfg


def _load_base(args) -> dict:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    if not Path(path).is_file():
        raise ConfigError(f"config file not found: {path}")
    return read_config_file(path)


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# -- human rendering --------------------------------------------------------

_EXP_PAREN = re.compile(r"exp\(\(([^()]*)\)\*u\)")
_EXP_SIMPLE = re.compile(r"exp\(([^()]*)\*u\)")
_FREE = re.compile(r"\br(\d+)\((u)\)")
_CONST = re.compile(r"\bc(\d+)\b")


def _init_names(entries) -> dict:
    """``R'ij(0)`` atoms -> fresh parameters ``c1, c2, ...`` by first use."""
    used = set()
    seen = []
    for e in entries:
        ids = set(e.atoms())
        for k in list(ids):
            if atoms.atom_of(k).kind == Kind.EXP:
                ids |= cf.rate_of(k).atoms()
        for k in sorted(ids, key=atoms.order_key):
            a = atoms.atom_of(k)
            if a.kind == Kind.SEED_PARAM:
                used.add(a.payload[0])
            elif a.kind == Kind.INIT_DERIV and k not in seen:
                seen.append(k)
    mp = {}
    n = 0
    for k in seen:
        n += 1
        while f"c{n}" in used:
            n += 1
        mp[k] = RatFunc(Poly.var(atoms.param(f"c{n}")))
    return mp


def render_entry(text: str) -> str:
    t = _EXP_PAREN.sub(lambda m: "e^{(" + m.group(1) + ") u}", text)
    t = _EXP_SIMPLE.sub(lambda m: "e^{" + m.group(1) + " u}", t)
    t = t.replace("exp(u)", "e^{u}")
    t = _FREE.sub(r"r_\1(\2)", t)
    t = _CONST.sub(r"c_\1", t)
    return t.replace("*", " ")


def render_matrix(rows) -> list[str]:
    """Bracketed rows with aligned columns; derivative constants at zero
    shown as ``c_k``."""
    M = RMatrixSymbolic.from_rows(rows)
    ents = [x for row in M.rows() for x in row]
    mp = _init_names(ents)
    cells = [[render_entry(cf.substitute(x, mp).to_text() if mp else x.to_text()) for x in row]
             for row in M.rows()]
    width = [max(len(r[c]) for r in cells) for c in range(len(cells))]
    return ["[ " + "  ".join(x.rjust(width[c]) for c, x in enumerate(r)) + " ]" for r in cells]


# -- reports ----------------------------------------------------------------


def _seed_entry(seed) -> dict | None:
    res = V.verify_constant(seed.template, seed.relations)
    if not res.passed:
        return None
    return {
        "id": f"{seed.id}-seed",
        "group": seed.id,
        "kind": "constant",
        "vertex": None,
        "rows": seed.template.to_text_rows(),
        "side_conditions": [p.to_text() for p in seed.side_conditions],
        "relations": [p.to_text() for p in seed.relations],
        "note": "constant seed",
    }


def classes_doc(entries: list[dict], cfg: Y.MatchConfig | None = None) -> list[dict]:
    items = V.parse_solutions({"schema": V.CORPUS_SCHEMA, "solutions": entries})
    out = []
    for cls in Y.dedup(items, cfg):
        out.append({
            "representative": cls.representative.id,
            "members": [{"id": m.id, "from": via.id if via is not None else None,
                         "witness": w.to_doc() if w is not None else None}
                        for m, w, via in cls.members],
            "flags": list(cls.flags),
        })
    return out


def solve_report(g: S.RmGraph, dedup: bool = True) -> dict:
    entries = []
    seed_e = _seed_entry(g.seed)
    if seed_e is not None:
        entries.append(seed_e)
    entries += S.solutions(g)
    doc = {
        "schema": V.CORPUS_SCHEMA,
        "seed": g.seed_id,
        "mode": g.mode.value,
        "tuning": asdict(g.tuning),
        "summary": g.summary(),
        "solutions": entries,
    }
    if dedup:
        doc["classes"] = classes_doc(entries)
    doc["human"] = human_lines(doc)
    return doc


def human_lines(doc: dict) -> list[str]:
    out = [f"seed {doc.get('seed', '?')} ({doc.get('mode', '?')})"]
    s = doc.get("summary")
    if s:
        out.append(", ".join(f"{k} {v}" for k, v in s.items()))
    for e in doc.get("solutions", []):
        out.append("")
        tag = f" [{e['note']}]" if e.get("note") else ""
        out.append(f"{e['id']}{tag}")
        out += ["  " + line for line in render_matrix(e["rows"])]
        if e.get("relations"):
            out.append("  where " + ", ".join(render_entry(r) + " = 0" for r in e["relations"]))
        if e.get("side_conditions"):
            out.append("  with " + ", ".join(render_entry(r) + " != 0" for r in e["side_conditions"]))
    if doc.get("classes"):
        out.append("")
        out.append(f"{len(doc['classes'])} classes")
        for c in doc["classes"]:
            out.append(f"  {c['representative']}: " + ", ".join(m["id"] for m in c["members"]))
    return out


def summary_text(g: S.RmGraph) -> str:
    s = g.summary()
    return (f"seed {g.seed_id} mode {g.mode.value}: {s['vertices']} vertices, "
            f"{s['finalized']} finalized, {s['exhausted']} exhausted, "
            f"{s['stopped']} stopped, {s['merged']} merged\n")


def _write_run(g: S.RmGraph, out: Path, graph_path: Path | None = None) -> None:
    _write(graph_path or out / "graph.json", dump_json(S.graph_to_doc(g)))
    _write(out / "report.json", dump_json(solve_report(g)))
    _write(out / "summary.txt", summary_text(g))


# -- commands ---------------------------------------------------------------


def cmd_solve(args) -> int:
    cfg = build_config(args, _load_base(args))
    cfg.validate()
    g = S.search(cfg.seed_id, cfg.mode, cfg.tuning, cfg.jobs)
    out = Path(cfg.out)
    _write_run(g, out)
    sys.stdout.write(summary_text(g))
    return EXIT_OK


def _read_json(path: str):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(path)
    text = p.read_text()
    if not text.strip():
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise V.CorpusError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def cmd_verify(args) -> int:
    doc = _read_json(args.input)
    if doc is None or not doc.get("solutions"):
        print(f"warning: {args.input} has no solutions", file=sys.stderr)
        return EXIT_OK
    report = V.corpus_check(V.parse_solutions(doc))
    for line in report.lines():
        print(line)
    fails = report.failures()
    print(f"{len(report.results) - len(fails)}/{len(report.results)} passed")
    return EXIT_OK if not fails else EXIT_FAIL


def cmd_canon(args) -> int:
    doc = _read_json(args.input)
    entries = [] if doc is None else doc.get("solutions", [])
    if doc is not None and doc.get("schema") != V.CORPUS_SCHEMA:
        raise V.CorpusError(f"unsupported schema {doc.get('schema')!r}")
    out = {"schema": CLASSES_SCHEMA, "source": os.path.basename(args.input),
           "classes": classes_doc(entries)}
    text = dump_json(out)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_graph(args) -> int:
    doc = _read_json(args.graph)
    if doc is None:
        raise S.SchemaMismatch(f"{args.graph} is empty")
    g = S.graph_from_doc(doc)
    text = dump_json(S.graph_to_doc(g)) if args.format == "structured" else S.to_dot(g)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_resume(args) -> int:
    doc = _read_json(args.graph)
    if doc is None:
        raise S.SchemaMismatch(f"{args.graph} is empty")
    g = S.graph_from_doc(doc)
    base = _load_base(args)
    vals = {k: v for k, v in base.items() if k in _TUNING_KEYS}
    tune = asdict(g.tuning)
    tune.update({k: _int(k, v) for k, v in vals.items()})
    for k in _TUNING_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            tune[k] = v
    try:
        tuning = S.Tuning(**tune)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    jobs = args.jobs if args.jobs is not None else _int("jobs", base.get("jobs", 1))
    S.resume(g, tuning, jobs)
    graph_path = Path(args.graph)
    out = Path(args.out) if args.out else graph_path.parent
    _write_run(g, out, graph_path if not args.out else None)
    sys.stdout.write(summary_text(g))
    return EXIT_OK


def cmd_catalog(args) -> int:
    for s in seed_catalog():
        alias = f" (= {', '.join(s.aliases)})" if s.aliases else ""
        print(f"{s.id}{alias}: rank {s.rank}, params {', '.join(s.params) or '-'}")
        if args.verbose:
            for line in render_matrix(s.template.to_text_rows()):
                print("  " + line)
    return EXIT_OK


def _tuning_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-term", dest="n_term", type=int)
    p.add_argument("--n-diff", dest="n_diff", type=int)
    p.add_argument("--n-lim", dest="n_lim", type=int)
    p.add_argument("--pair-budget", dest="pair_budget", type=int)
    p.add_argument("--reduce-budget", dest="reduce_budget", type=int)
    p.add_argument("--max-vertices", dest="max_vertices", type=int)
    p.add_argument("--branch-depth", dest="branch_depth", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--config", help=f"flat key = value file (default: ${CONFIG_ENV})")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ybsearch", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the search from a catalog seed")
    p.add_argument("--seed")
    p.add_argument("--mode", choices=[m.value for m in S.Mode])
    p.add_argument("--out", help="output directory")
    _tuning_flags(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("verify", help="verify a solutions file")
    p.add_argument("input")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("canon", help="group a solutions file into equivalence classes")
    p.add_argument("input")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_canon)

    p = sub.add_parser("export-graph", help="re-export a graph document")
    p.add_argument("graph")
    p.add_argument("--format", choices=["structured", "dot"], default="structured")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_export_graph)

    p = sub.add_parser("resume", help="continue a persisted search")
    p.add_argument("graph")
    p.add_argument("--out", help="output directory (default: next to the graph)")
    _tuning_flags(p)
    p.set_defaults(fn=cmd_resume)

    p = sub.add_parser("catalog", help="list the seed catalog")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(fn=cmd_catalog)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"ybsearch: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (V.CorpusError, S.SchemaMismatch) as exc:
        print(f"ybsearch: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"ybsearch: file not found: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"ybsearch: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
