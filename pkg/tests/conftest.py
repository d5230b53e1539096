import random

import pytest
from hypothesis import HealthCheck, settings

from seabrew.algebra import get_group

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def curve():
    return get_group("80bit")


@pytest.fixture(scope="session")
def sim_group():
    return get_group("insecure-sim")


@pytest.fixture(params=["80bit", "insecure-sim"])
def group(request):
    return get_group(request.param)


@pytest.fixture
def rng():
    return random.Random(1234)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, ok, detail)``."""
    store = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(n, ok, detail):
        store[n] = (bool(ok), detail)
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        ok, detail = store[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
