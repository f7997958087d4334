import pytest
from hypothesis import HealthCheck, settings

from flattumor import ForcingFunction, ModelParams, find_periodic

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def stationary():
    return ModelParams(1.0, 0.5, ForcingFunction.constant(1.0))


@pytest.fixture(scope="session")
def cosine():
    return ModelParams(1.0, 0.5, ForcingFunction(1.0, 1.0, (0.5,)))


@pytest.fixture(scope="session")
def cosine_orbit(cosine):
    return find_periodic(cosine)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, name, passed, detail)``."""
    store = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(n: int, name: str, passed: bool, detail: str) -> bool:
        line = f"criterion {n:2d}  {'PASS' if passed else 'FAIL'}  {name}: {detail}"
        store.append((n, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
