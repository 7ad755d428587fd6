import numpy as np
import pytest

from eann import data as D
from eann.ga import Layout


@pytest.fixture(scope="session")
def surrogate():
    return D.synthetic_surrogate()


@pytest.fixture(scope="session")
def surrogate_parts(surrogate):
    normed, params = D.normalize(surrogate)
    train, test = D.split(normed)
    return train, test, D.compute_stats(train)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_layout():
    return Layout(n_inputs=4, n_outputs=1, n_kernels=3, n_basis=2, bits=12)


ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion."""
    def record(criterion, passed, detail):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[criterion] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=str):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
