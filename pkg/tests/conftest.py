import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from dyadlab.lattice import DyadicTree, GridFunction


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def tree6():
    return DyadicTree(1, 6, 1.0)


@pytest.fixture
def tree2d():
    return DyadicTree(2, 3, 1.0)


def random_grid(tree, rng, scale=1.0):
    return GridFunction(tree, scale * rng.normal(size=tree.shape))
