import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.arith import Arith  # noqa: E402
from src.spaces import BlockPartition, build_grid  # noqa: E402


@pytest.fixture
def arith():
    return Arith()


@pytest.fixture
def exact():
    return Arith(exact=True)


@pytest.fixture
def uniform4():
    return build_grid([1, 1, 1, 1])


@pytest.fixture
def uniform4_exact(exact):
    return build_grid([1, 1, 1, 1], arith=exact)


@pytest.fixture
def pairs():
    """块 {0,1}、{2,3}"""
    return BlockPartition((0, 0, 1, 1))


@pytest.fixture
def trivial4():
    return BlockPartition.trivial(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
