"""Session fixtures shared by the corpus-level tests, and the acceptance summary."""

from __future__ import annotations

import os
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from audit import audit  # noqa: E402
from tsp12.enumerate import gen_biconnected  # noqa: E402

CORPUS_MAX_N = 8

_acceptance = []


@pytest.fixture(scope="session")
def corpus_audits():
    """Per-graph audits of every biconnected cost-1 graph on 3..8 nodes, by n."""
    out = {}
    for n in range(3, CORPUS_MAX_N + 1):
        start = time.time()
        out[n] = [audit(g.cert, g.instance()) for g in gen_biconnected(n)]
        print(f"\naudited {len(out[n])} graphs on {n} nodes in {time.time() - start:.1f}s")
    return out


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.path.name == "test_acceptance.py":
        doc = (getattr(item, "function", None).__doc__ or "").strip()
        reason = ""
        if rep.failed and hasattr(rep.longrepr, "reprcrash"):
            reason = rep.longrepr.reprcrash.message.splitlines()[0]
        _acceptance.append((item.name, rep.outcome, doc, reason))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, doc, reason in _acceptance:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}: {doc}")
        if reason:
            terminalreporter.write_line(f"      {reason}")
