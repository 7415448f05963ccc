import numpy as np
import pytest

from vtloc.graphs import Graph


def random_connected_graph(n, prob, rng, weighted=False):
    """Erdos-Renyi instance, resampled until connected."""
    for _ in range(200):
        a = (rng.random((n, n)) < prob).astype(float)
        if weighted:
            a *= 0.5 + rng.random((n, n))
        a = np.triu(a, 1)
        a = a + a.T
        try:
            return Graph(adjacency=a)
        except ValueError:
            continue
    raise RuntimeError("could not draw a connected graph")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
