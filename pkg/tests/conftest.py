import numpy as np
import pytest

from codazzi.merton import merton_metric
from codazzi.solitons import catalog


@pytest.fixture(scope="session")
def merton():
    return merton_metric()


@pytest.fixture(scope="session")
def merton_grid(merton):
    return merton.default_grid()


@pytest.fixture(scope="session")
def solitons():
    return catalog()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)``; printed in the terminal summary."""

    def record(key, passed, detail):
        ACCEPTANCE[key] = f"{'PASS' if passed else 'FAIL'}  criterion {key}: {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
