import numpy as np
import pytest

from composite_ff.model import ModelSpec
from composite_ff.suites import Lab, Settings


def kron_site_op(op: np.ndarray, n: int, N: int, M: int) -> np.ndarray:
    """op on site n (1-based, site 1 slowest) and identity elsewhere, via np.kron."""
    out = np.ones((1, 1), dtype=complex)
    for s in range(1, M + 1):
        out = np.kron(out, op if s == n else np.eye(N))
    return out


def unit(i: int, j: int, N: int) -> np.ndarray:
    e = np.zeros((N, N), dtype=complex)
    e[i - 1, j - 1] = 1
    return e


@pytest.fixture(scope="session")
def spec34() -> ModelSpec:
    return ModelSpec.random(3, 4, seed=7)


@pytest.fixture(scope="session")
def lab34(spec34) -> Lab:
    return Lab(spec34, Settings())


@pytest.fixture(scope="session")
def states34(lab34):
    return lab34.bethe_states()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
