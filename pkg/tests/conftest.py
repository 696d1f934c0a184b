import numpy as np
import pytest

from flowsentry.graph import WorkflowGraph


def path_adjacency(n):
    a = np.zeros((n, n), dtype=np.int8)
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = 1
    return a


def random_graph(rng, n, d, p_edge=0.35, labels=False, graph_id="t"):
    upper = np.triu(rng.random((n, n)) < p_edge, 1)
    a = (upper | upper.T).astype(np.int8)
    y = (rng.random(n) < 0.3).astype(np.int8) if labels else None
    return WorkflowGraph(a, rng.random((n, d)), labels=y, graph_id=graph_id)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def path5():
    x = np.arange(10, dtype=np.float64).reshape(5, 2) / 10.0
    x[2] = [0.9, 0.05]
    return WorkflowGraph(path_adjacency(5), x, graph_id="path5")


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])
