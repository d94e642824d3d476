import numpy as np
import pytest
from hypothesis import settings

from disim.graph import SparseGraph

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def _two_cliques(size=10):
    A = np.kron(np.eye(2), np.ones((size, size))) - np.eye(2 * size)
    return SparseGraph.from_matrix(A)


def _bottleneck(size=8, seed=0):
    """Two dense groups plus node ``2*size`` sending into group 0, receiving from group 1."""
    rng = np.random.default_rng(seed)
    n = 2 * size + 1
    A = np.zeros((n, n))
    for g in range(2):
        idx = np.arange(g * size, (g + 1) * size)
        A[np.ix_(idx, idx)] = rng.random((size, size)) < 0.9
    np.fill_diagonal(A, 0)
    b = 2 * size
    A[b, :size] = 1
    A[size:2 * size, b] = 1
    return SparseGraph.from_matrix(A)


@pytest.fixture
def two_cliques():
    return _two_cliques()


@pytest.fixture
def bottleneck():
    return _bottleneck()


@pytest.fixture
def make_bottleneck():
    return _bottleneck


def random_graph(rng, n_rows, n_cols=None, density=0.3, weighted=False, kind=None):
    n_cols = n_rows if n_cols is None else n_cols
    mask = rng.random((n_rows, n_cols)) < density
    W = rng.uniform(0.5, 3.0, size=mask.shape) if weighted else np.ones(mask.shape)
    return SparseGraph.from_matrix(np.where(mask, W, 0.0), kind=kind)


@pytest.fixture
def rgraph():
    return random_graph


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(criterion, passed, detail):
        line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
