"""Shared fixtures plus a terminal summary for the acceptance gate."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from cgmplan import CgmModel, fixtures

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def mpers() -> CgmModel:
    return fixtures.load_mpers()


# ---------------------------------------------------------------------------
# Acceptance reporting: one PASS/FAIL line per criterion at the end of the
# run, so the gate's verdict is readable without scanning the full log.
# ---------------------------------------------------------------------------

_CRITERIA = {
    "test_criterion_1_fixture_scenarios": "1. documented fixture scenarios reproduce exactly (< 1 s)",
    "test_criterion_2_oracle_equivalence": "2. verdicts and plans match the brute-force oracle on 1000+ models (< 60 s)",
    "test_criterion_3_linear_scaling": "3. worst-case timing is linear in nodes, every node visited once (10k mean <= 5 s)",
    "test_criterion_4_sweep_coverage": "4. 10 s sweep: 100% of 32768 sets at 300 nodes, >= 25% at 10000 nodes",
    "test_criterion_5_property_suite": "5. algebraic properties hold with zero failures",
}

_results: dict[str, str] = {}


def pytest_runtest_logreport(report: pytest.TestReport) -> None:
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if name not in _CRITERIA:
        return
    if report.when == "call":
        _results[name] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.skipped:
        _results[name] = "SKIP"
    elif report.when == "setup" and report.failed:
        _results[name] = "FAIL"


def pytest_terminal_summary(terminalreporter) -> None:
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, label in _CRITERIA.items():
        verdict = _results.get(name, "MISSING")
        terminalreporter.write_line(f"{verdict:4s} {label}")
