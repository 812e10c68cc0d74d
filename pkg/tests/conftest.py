import sys

import numpy as np
import pytest

from icanrank.graph import Graph


def star(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def random_graph(rng: np.random.Generator, n: int, p: float, connected: bool = False) -> Graph:
    """G(n, p); with ``connected`` a random spanning tree is added first."""
    pairs = set()
    if connected:
        perm = rng.permutation(n)
        for k in range(1, n):
            a, b = int(perm[k]), int(perm[rng.integers(k)])
            pairs.add((min(a, b), max(a, b)))
    iu = np.triu_indices(n, 1)
    keep = rng.random(iu[0].size) < p
    pairs.update(zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
    return Graph.from_edges(n, sorted(pairs))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
