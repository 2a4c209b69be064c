import numpy as np
import pytest

from wsbmtest.graph import WeightedGraph


def random_graph(rng, n, low=0.0, high=1.0):
    a = np.triu(rng.uniform(low, high, size=(n, n)), 1)
    return WeightedGraph(a + a.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record(criterion: int, passed, detail: str):
    """``passed`` is True, False or None (skipped)."""
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion}: {status}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
