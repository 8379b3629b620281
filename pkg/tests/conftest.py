import numpy as np
import pytest

from qhsb.operators import HilbertSpec
from qhsb.trajectories import fig1_parameters

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def spec():
    return HilbertSpec()


@pytest.fixture(scope="session")
def small_spec():
    return HilbertSpec(24, 6)


@pytest.fixture(scope="session")
def fig1():
    return fig1_parameters()


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        label = dict(report.user_properties).get("criterion", report.nodeid.split("::")[-1])
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE[report.nodeid] = (label, report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, detail in _ACCEPTANCE.values():
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}" + (f"  ({detail})" if detail else ""))
