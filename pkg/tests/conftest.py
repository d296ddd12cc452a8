import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from horolab.models import make_model

settings.register_profile("horolab", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("horolab")

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def H2():
    return make_model("hyperbolic", 2)


@pytest.fixture(scope="session")
def H3():
    return make_model("hyperbolic", 3)


@pytest.fixture(scope="session")
def E2():
    return make_model("euclidean", 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
