import numpy as np
import pytest

from tlradi.problem import LyapunovProblem

ACCEPTANCE_LINES = []


@pytest.fixture
def scalar_problem():
    return LyapunovProblem([[-1.0]], [[1.0]], [[1.0]])


@pytest.fixture
def diag_problem():
    return LyapunovProblem(np.diag([-1.0, -2.0]), np.eye(2), np.eye(2))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section('acceptance criteria')
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
