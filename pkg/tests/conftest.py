import numpy as np
import pytest

from ensrlab.prob import JointDistribution

ACCEPTANCE_LINES = []


@pytest.fixture
def bsc_joint():
    """Uniform Y on {0, 1} observed through BSC(0.1) onto X in {-1, +1}."""
    return JointDistribution([-1.0, 1.0], [0.0, 1.0], [[0.45, 0.05], [0.05, 0.45]])


@pytest.fixture
def bec_joint():
    return JointDistribution([-1.0, 0.0, 1.0], [0.0, 1.0],
                             [[0.25, 0.0], [0.25, 0.25], [0.0, 0.25]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_record():
    def record(number, description, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"criterion {number:>2} {status}: {description} {detail}".rstrip())
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
