import sys

import pytest

CRITERIA = {
    1: "attenuation vs high-precision oracle",
    2: "clamp and monotonicity",
    3: "gate statistics",
    4: "published score arithmetic",
    5: "end-to-end mock pipeline",
    6: "rectification accounting",
    7: "backtracking convergence",
    8: "ablation toggles",
    9: "code length == manifest bytes",
    10: "golden prompt parsing",
}

_outcomes: dict[int, bool] = {}


def _criterion(nodeid: str):
    name = nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" in nodeid and name.startswith("test_criterion_"):
        return int(name.split("_")[2])
    return None


def pytest_runtest_logreport(report):
    n = _criterion(report.nodeid)
    if n is None:
        return
    if report.when == "call" or report.failed:
        _outcomes[n] = _outcomes.get(n, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    verdicts = getattr(sys.modules.get("test_acceptance"), "VERDICTS", {})
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        if n not in _outcomes:
            continue
        status = "PASS" if _outcomes[n] else "FAIL"
        detail = verdicts.get(n, "")
        terminalreporter.write_line(f"criterion {n:2d} {status}  {title}: {detail}")
