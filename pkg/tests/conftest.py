import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    key = (props["criterion"], report.nodeid)
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[key] = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for ((n, title), nodeid), outcome in sorted(_ACCEPTANCE.items(),
                                                 key=lambda kv: (kv[0][0][0], kv[0][1])):
        test = nodeid.split("::", 1)[-1]
        terminalreporter.write_line(f"criterion {n}: {outcome:4s} {title} [{test}]")


@pytest.fixture
def toy_ibm_corpus():
    return [("la maison".split(), "the house".split()),
            ("la fleur".split(), "the flower".split())]
