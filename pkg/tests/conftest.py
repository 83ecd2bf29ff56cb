import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion with a verdict line")
    config._verdicts = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    detail = dict(item.user_properties).get("detail", "")
    verdict = "PASS" if rep.passed else "FAIL"
    item.config._verdicts.append((mark.args[0], mark.args[1], verdict, detail))
    # also visible in captured output of the test itself
    rep.sections.append(("verdict", f"{verdict} criterion {mark.args[0]}: {detail}"))


def pytest_terminal_summary(terminalreporter, config):
    rows = sorted(getattr(config, "_verdicts", []))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, detail in rows:
        terminalreporter.write_line(f"{verdict} {number:>2} {title}: {detail}")
