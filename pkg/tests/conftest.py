import numpy as np
import pytest

from lgg.graph import SparseGraph


def random_graph(rng, n, p=0.3, low=0.0, high=1.0):
    """Erdos-Renyi pattern with uniform weights."""
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    w = rng.uniform(low, high, iu.size)
    return SparseGraph.from_edges(n, list(zip(iu[keep], ju[keep], w[keep])))


def path_graph(n, w=1.0):
    return SparseGraph.from_edges(n, [(i, i + 1, w) for i in range(n - 1)])


def clique_edges(vertices, w=1.0):
    vs = list(vertices)
    return [(a, b, w) for k, a in enumerate(vs) for b in vs[k + 1:]]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
