import numpy as np
import pytest

from sqmean.core import FiniteDistribution, Query


@pytest.fixture
def fair_coin():
    return FiniteDistribution.from_dict({0: 0.5, 1: 0.5})


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def identity(dist, lo=None, hi=None):
    return Query(dist, dist.support, lo, hi)
