import numpy as np
import pytest

from sparseglm import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    return request.param


_VERDICTS = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
    name = report.nodeid.split("::")[-1]
    _VERDICTS.append(f"{'PASS' if report.passed else 'FAIL'}  {name}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
