import numpy as np
import pytest

from rkbs_mirror._backend import available_backends

P_GRID = (1.25, 1.33, 1.4, 1.5, 1.67, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(available_backends()))
def backend(request):
    return available_backends()[request.param]


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in __import__("sys").modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
