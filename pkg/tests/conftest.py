import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("mfbs", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("mfbs")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture
def criterion(request):
    """Record ``(number, passed, detail)`` for the acceptance summary, then assert."""
    store = request.config._acceptance

    def record(number, passed, detail):
        store[number] = (bool(passed), detail)
        assert passed, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_acceptance", {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        ok, detail = store[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
