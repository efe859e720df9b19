import numpy as np
import pytest

from rbfpu.harness import eval_grid, product_dataset, product_function


@pytest.fixture(scope="session")
def halton289():
    return product_dataset(289)


@pytest.fixture(scope="session")
def halton1089():
    return product_dataset(1089)


@pytest.fixture(scope="session")
def grid40():
    g = eval_grid(40, 2)
    return g, product_function(g)


def brute_ball(nodes, center, radius):
    d = np.sqrt(np.sum((np.asarray(nodes) - np.asarray(center)) ** 2, axis=1))
    return np.flatnonzero(d <= radius)
