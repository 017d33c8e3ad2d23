import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_ACCEPT: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    ok, dur = _ACCEPT.get(name, (True, 0.0))
    # setup time counts, so fixture-driven searches are included
    if report.when in ("setup", "call"):
        dur += report.duration
    ok = ok and not report.failed and not report.skipped
    _ACCEPT[name] = (ok, dur)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPT:
        return
    from test_acceptance import TITLES

    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_ACCEPT, key=lambda t: int(t.split("_")[2])):
        ok, dur = _ACCEPT[name]
        n = int(name.split("_")[2])
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {TITLES[n]}  ({dur:.1f} s)")
