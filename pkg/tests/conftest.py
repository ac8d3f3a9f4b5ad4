import time
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

_acceptance = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and rep.when == "call":
        detail = dict(item.user_properties).get("detail", "")
        _acceptance.append((marker.args[0], marker.args[1], rep.passed, rep.duration, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, passed, dur, detail in sorted(_acceptance):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {num}: {title} ({dur:.2f}s)")
        if detail:
            terminalreporter.write_line(f"      {detail}")


@pytest.fixture(scope="session")
def fixtures_dir():
    if not (FIXTURES / "toy.net.json").exists():
        import subprocess
        import sys

        subprocess.run([sys.executable, str(FIXTURES.parent / "scripts" / "make_fixtures.py")], check=True)
    return FIXTURES


@pytest.fixture
def stopwatch():
    t0 = time.perf_counter()
    return lambda: time.perf_counter() - t0
