import numpy as np
import pytest
from hypothesis import settings

from cablecal.kinematics import DhTable, LinkParams, default_robot

settings.register_profile("fast", max_examples=25)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile("ci")

np.seterr(all="raise", under="ignore")


def random_table(rng, reach=400.0):
    links = [LinkParams(a=rng.uniform(-reach, reach), d=rng.uniform(-reach, reach),
                        theta_offset=rng.uniform(-np.pi, np.pi), alpha=rng.uniform(-np.pi, np.pi))
             for _ in range(6)]
    return DhTable(links, [(-np.pi, np.pi)] * 6)


def zero_table():
    return DhTable([LinkParams(0.0, 0.0, 0.0, 0.0)] * 6, [(-np.pi, np.pi)] * 6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def robot():
    return default_robot()


_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" in report.nodeid and (report.when == "call" or report.failed):
        _CRITERIA[report.nodeid] = report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_CRITERIA, key=lambda n: int(n.split("test_criterion_")[1].split("_")[0])):
        report = _CRITERIA[nodeid]
        name = nodeid.split("::")[-1][len("test_criterion_"):]
        number, _, title = name.partition("_")
        details = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        status = "PASS" if report.passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} {status}: {title.replace('_', ' ')} ({details})")
