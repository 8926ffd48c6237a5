import numpy as np
import pytest

from adasub.core import AdaptiveProblem
from adasub.infmax import gen_star


def star_problem(k):
    prior, f = gen_star(k).to_tabular()
    return AdaptiveProblem(f, prior)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
