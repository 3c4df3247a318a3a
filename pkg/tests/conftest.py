import os

import pytest
from hypothesis import HealthCheck, settings

from multipass import PotentialConfig

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CRITERIA_LOG: dict[int, str] = {}


@pytest.fixture(scope="session")
def criterion_log():
    return CRITERIA_LOG


@pytest.fixture(params=["exp2", "exp3"], scope="session")
def cfg(request):
    return PotentialConfig.from_name(request.param)


@pytest.fixture(scope="session")
def exp2():
    return PotentialConfig.exp2()


@pytest.fixture(scope="session")
def exp3():
    return PotentialConfig.exp3()


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA_LOG):
        terminalreporter.write_line(CRITERIA_LOG[k])
