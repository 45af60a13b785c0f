import os
import sys

from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance criteria report one line each at the end of the session
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        marker = report.nodeid.rsplit("::", 1)[-1]
        ACCEPTANCE_RESULTS[marker] = (report.passed, report.longreprtext.splitlines()[-1]
                                      if report.failed and report.longreprtext else "")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, why) in sorted(ACCEPTANCE_RESULTS.items()):
        line = f"{'PASS' if ok else 'FAIL'}  {name}"
        if why:
            line += f"  ({why})"
        terminalreporter.write_line(line)
