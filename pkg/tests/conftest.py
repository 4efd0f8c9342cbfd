from __future__ import annotations

import pytest

from timebound.analysis import run_phases
from timebound.corpus import load_corpus
from timebound.sim import exhaustive_run

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = getattr(report, "_criterion", None)
    if crit is None:
        return
    n, title = crit
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "detail": []})
    if report.outcome != "passed":
        entry["ok"] = False
        entry["detail"].append(report.nodeid.split("::")[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] else "FAIL"
        extra = f"  ({', '.join(e['detail'])})" if e["detail"] else ""
        terminalreporter.write_line(f"criterion {n:2d} {status}  {e['title']}{extra}")


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def analyzed(corpus):
    """name -> (fixture, AnalysisResult, ExhaustiveResult) under the default config."""
    out = {}
    for name, fx in corpus.items():
        res = run_phases(fx.image, fx.annotations)
        ex = exhaustive_run(fx.image, res.mcfg, fx.input_domain)
        out[name] = (fx, res, ex)
    return out
