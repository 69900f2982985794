import os

import pytest
from hypothesis import HealthCheck, settings

from qdsv.model import REFERENCE_PARAMS

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def reference_params():
    return REFERENCE_PARAMS


@pytest.fixture
def data_dir():
    return DATA


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def criterion(request):
    """record(number, ok, detail): log one part of an acceptance criterion, then assert it."""
    results = request.config.stash[_CRITERIA]

    def record(number: int, ok: bool, detail: str) -> None:
        prev_ok, prev_detail = results.get(number, (True, []))
        results[number] = (prev_ok and bool(ok), prev_detail + [detail])
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_CRITERIA]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, details = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {'; '.join(details)}")
