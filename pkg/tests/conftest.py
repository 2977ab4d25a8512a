import numpy as np
import pytest

from fcert import kernels
from fcert.core import Episode


def make_episode(rng, ways=3, shots=5, dim=4, queries_per_class=2, spread=1.0, separation=3.0):
    centers = rng.normal(size=(ways, dim)) * separation
    support = centers[:, None, :] + spread * rng.normal(size=(ways, shots, dim))
    queries = np.repeat(centers, queries_per_class, axis=0) + spread * rng.normal(size=(ways * queries_per_class, dim))
    labels = np.repeat(np.arange(ways), queries_per_class)
    return Episode(support, queries, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


_ACCEPTANCE: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" in report.nodeid and (report.when == "call" or report.failed):
        name = report.nodeid.split("::")[-1]
        prev = _ACCEPTANCE.get(name, "PASS")
        _ACCEPTANCE[name] = "FAIL" if report.failed or prev == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split("_")[2])):
        terminalreporter.write_line(f"{_ACCEPTANCE[name]}  {name}")
