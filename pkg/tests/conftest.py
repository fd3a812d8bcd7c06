import numpy as np
import pytest

from hlcl.graph import CsrGraph


def random_graph(rng, n, p=None):
    """Erdos-Renyi graph; isolated nodes allowed."""
    p = rng.uniform(0.05, 0.5) if p is None else p
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return CsrGraph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))


@pytest.fixture
def path3():
    return CsrGraph.from_edges(3, [(0, 1), (1, 2)])


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
