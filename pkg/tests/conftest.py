import numpy as np
import pytest

from carleman_picard.config import RunConfig
from carleman_picard.pipeline import simulate_boundary
from carleman_picard.reduction import tensor_basis


@pytest.fixture(scope="session")
def reference_basis():
    return tensor_basis(1.0, 0.5, 15, 10)


@pytest.fixture(scope="session")
def small_basis():
    return tensor_basis(1.0, 0.5, 4, 3)


class _RecordCache:
    """Noiseless boundary records per phantom, simulated once per session."""

    def __init__(self):
        self._store = {}

    def __call__(self, test: str):
        if test not in self._store:
            self._store[test] = simulate_boundary(RunConfig(test=test))
        return self._store[test]


@pytest.fixture(scope="session")
def clean_records():
    return _RecordCache()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one verdict line per acceptance criterion for the terminal summary."""

    def log(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES[number] = line
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[number])
